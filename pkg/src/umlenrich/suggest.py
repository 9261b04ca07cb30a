"""Suggestion production: additive changes proposed for a (model, use case) pair.

Two interchangeable backends produce :class:`SuggestionSet` values:

* :class:`LlmBackend` sends one chat-completion request per use case. The
  reply contract is a single fenced code block holding the FULL updated
  diagram; suggestions are recovered by structural diff against the input
  model, so formatting drift in the reply is harmless but dropping or
  altering an existing element raises :class:`DestructiveReply`.
* :class:`RulesBackend` replays a deterministic JSON mapping from use-case
  IDs to suggestions — the fully offline stand-in used for golden replays.

Applying a suggestion set (`apply_suggestions`) is monotone and idempotent:
it only ever appends, and re-applying a set is a no-op.
"""

from __future__ import annotations

import json
import os
import re
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional

from . import diffmerge
from .errors import (
    AuthError,
    DestructiveReply,
    InvariantViolation,
    MalformedReply,
    MappingError,
    TransportError,
)
from .model import (
    Attribute,
    ClassDef,
    ClassModel,
    Method,
    Relationship,
    add_class,
    add_method,
    add_relationship,
)
from .plantuml import ParseError, parse, parse_member, parse_relationship, render, render_relationship
from .usecases import UseCase, render_usecase

ADD_CLASS = "add_class"
ADD_METHOD = "add_method"
ADD_RELATIONSHIP = "add_relationship"


@dataclass(frozen=True, slots=True)
class Suggestion:
    """One proposed additive change, traceable to the use case that caused it."""

    kind: str
    source_uc: str = ""
    rationale: str = ""
    class_name: Optional[str] = None
    class_def: Optional[ClassDef] = None
    method: Optional[Method] = None
    relationship: Optional[Relationship] = None

    def __post_init__(self) -> None:
        if self.kind == ADD_CLASS:
            if self.class_def is None or self.method or self.relationship:
                raise InvariantViolation("add_class suggestions carry only a class_def")
        elif self.kind == ADD_METHOD:
            if not self.class_name or self.method is None:
                raise InvariantViolation("add_method suggestions carry class_name and method")
        elif self.kind == ADD_RELATIONSHIP:
            if self.relationship is None:
                raise InvariantViolation("add_relationship suggestions carry a relationship")
        else:
            raise InvariantViolation(f"unknown suggestion kind: {self.kind!r}")

    def payload_key(self) -> tuple:
        if self.kind == ADD_CLASS:
            attrs = tuple(sorted((a.name, a.type_name, a.visibility.value) for a in self.class_def.attributes))
            return (ADD_CLASS, self.class_def.name, attrs)
        if self.kind == ADD_METHOD:
            return (ADD_METHOD, self.class_name, self.method.signature, self.method.return_type)
        return (ADD_RELATIONSHIP, self.relationship.key())

    def describe(self) -> str:
        if self.kind == ADD_CLASS:
            return f"add class {self.class_def.name}"
        if self.kind == ADD_METHOD:
            return f"add method {self.class_name}.{self.method.render_signature()}"
        return f"add relationship {render_relationship(self.relationship)}"


@dataclass(frozen=True, slots=True)
class SuggestionSet:
    suggestions: tuple[Suggestion, ...] = ()
    backend_name: str = ""
    raw_reply: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "suggestions", tuple(self.suggestions))
        keys = [s.payload_key() for s in self.suggestions]
        if len(set(keys)) != len(keys):
            raise InvariantViolation("suggestion set contains duplicates")
        # AddClass must precede same-set suggestions that depend on the class.
        introduced_later: dict[str, int] = {
            s.class_def.name: i
            for i, s in enumerate(self.suggestions)
            if s.kind == ADD_CLASS
        }
        for i, s in enumerate(self.suggestions):
            refs: tuple[str, ...] = ()
            if s.kind == ADD_METHOD:
                refs = (s.class_name,)
            elif s.kind == ADD_RELATIONSHIP:
                refs = s.relationship.endpoints()
            for name in refs:
                if name in introduced_later and introduced_later[name] > i:
                    raise InvariantViolation(
                        f"suggestion {s.describe()!r} precedes the add_class for {name!r}"
                    )

    def __len__(self) -> int:
        return len(self.suggestions)

    def __iter__(self):
        return iter(self.suggestions)


# --- delta <-> suggestions -----------------------------------------------------

def suggestions_of(
    delta: diffmerge.ModelDelta,
    source_uc: str = "",
    rationale: str = "recovered by structural diff",
) -> tuple[Suggestion, ...]:
    """Convert the additive part of a delta into ordered suggestions."""
    out: list[Suggestion] = []
    for shell in delta.added_classes:
        out.append(
            Suggestion(kind=ADD_CLASS, source_uc=source_uc, rationale=rationale, class_def=shell)
        )
    for class_name, method in delta.added_methods:
        out.append(
            Suggestion(
                kind=ADD_METHOD,
                source_uc=source_uc,
                rationale=rationale,
                class_name=class_name,
                method=method,
            )
        )
    for rel in delta.added_relationships:
        out.append(
            Suggestion(kind=ADD_RELATIONSHIP, source_uc=source_uc, rationale=rationale, relationship=rel)
        )
    return tuple(out)


def extract_suggestions(
    old: ClassModel,
    replied: ClassModel,
    source_uc: str = "",
    backend_name: str = "diff",
    raw_reply: Optional[str] = None,
) -> SuggestionSet:
    """Additive difference of two models as a suggestion set.

    Raises :class:`DestructiveReply` when ``replied`` lost or altered any
    element of ``old`` — removals are never silently re-added.
    """
    missing = diffmerge.missing_elements(old, replied)
    if missing:
        shown = ", ".join(missing[:5]) + ("..." if len(missing) > 5 else "")
        raise DestructiveReply(f"reply does not preserve existing elements: {shown}")
    delta = diffmerge.diff(old, replied)
    return SuggestionSet(
        suggestions=suggestions_of(delta, source_uc=source_uc),
        backend_name=backend_name,
        raw_reply=raw_reply,
    )


def apply_suggestions(model: ClassModel, suggestion_set: SuggestionSet) -> ClassModel:
    """Apply every suggestion in order. Monotone; duplicates are no-ops."""
    current = model
    for s in suggestion_set:
        if s.kind == ADD_CLASS:
            current = add_class(current, s.class_def)
        elif s.kind == ADD_METHOD:
            method = replace(s.method, provenance=s.source_uc or s.method.provenance)
            current = add_method(current, s.class_name, method)
        else:
            current = add_relationship(current, s.relationship)
    return current


# --- JSON (de)serialization ------------------------------------------------------

def suggestion_to_json(s: Suggestion) -> dict:
    data: dict = {"kind": s.kind, "source_uc": s.source_uc, "rationale": s.rationale}
    if s.kind == ADD_CLASS:
        data["class"] = s.class_def.name
        data["attributes"] = [
            f"{a.visibility.value}{a.name}: {a.type_name}" for a in s.class_def.attributes
        ]
    elif s.kind == ADD_METHOD:
        data["class"] = s.class_name
        data["signature"] = f"{s.method.visibility.value}{s.method.render_signature()}"
    else:
        data["relationship"] = render_relationship(s.relationship)
    return data


def suggestion_from_json(data: dict) -> Suggestion:
    kind = data.get("kind")
    source_uc = data.get("source_uc", "")
    rationale = data.get("rationale", "")
    if kind == ADD_CLASS:
        attributes = []
        for line in data.get("attributes", ()):
            member = parse_member(line)
            if not isinstance(member, Attribute):
                raise MappingError(f"add_class attribute line is not an attribute: {line!r}")
            attributes.append(member)
        return Suggestion(
            kind=ADD_CLASS,
            source_uc=source_uc,
            rationale=rationale,
            class_def=ClassDef(name=data["class"], attributes=tuple(attributes)),
        )
    if kind == ADD_METHOD:
        member = parse_member(data["signature"])
        if not isinstance(member, Method):
            raise MappingError(f"add_method signature is not a method: {data['signature']!r}")
        return Suggestion(
            kind=ADD_METHOD,
            source_uc=source_uc,
            rationale=rationale,
            class_name=data["class"],
            method=member,
        )
    if kind == ADD_RELATIONSHIP:
        return Suggestion(
            kind=ADD_RELATIONSHIP,
            source_uc=source_uc,
            rationale=rationale,
            relationship=parse_relationship(data["relationship"]),
        )
    raise MappingError(f"unknown suggestion kind: {kind!r}")


# --- prompt -----------------------------------------------------------------------

ENRICHMENT_INSTRUCTIONS = (
    "You are assigned the task of enriching the dynamics of a given PlantUML "
    "class diagram based on detailed use cases presented in table format. Your "
    "role involves deeply analyzing each use case table to determine the "
    "interactions and behaviors necessary within the system. Utilizing the "
    "provided class diagram, identify the involved classes and define the "
    "methods or operations required for each class to support the described "
    "functionality. Generate PlantUML code to update the class diagram, "
    "ensuring adherence to syntax and UML best practices. Maintain consistency "
    "in property names and utilize only existing attributes in the class "
    "diagram for method definitions. As new use case tables are provided, "
    "dynamically update the class diagram to accurately represent the system's "
    "behavior. Validate the completeness and accuracy of the updated diagram "
    "after each iteration. Your process must follow guidelines for thorough "
    "analysis, method incorporation, and validation, ensuring consistency "
    "throughout. Additionally, preserve all added methods in each iteration "
    "and maintain consistency in naming conventions, formatting, and UML "
    "notation."
)

REPLY_CONTRACT = (
    "Reply with exactly one fenced PlantUML code block containing the FULL "
    "updated class diagram: every existing class, attribute, method, and "
    "relationship preserved, plus your additions."
)


def prompt_messages(model: ClassModel, uc: UseCase) -> tuple[str, str]:
    """(system, user) message bodies for one enrichment request."""
    user = (
        "Current class diagram:\n\n"
        "```plantuml\n"
        f"{render(model)}"
        "```\n\n"
        "Use case table:\n\n"
        f"{render_usecase(uc)}\n"
        f"{REPLY_CONTRACT}"
    )
    return ENRICHMENT_INSTRUCTIONS, user


def build_prompt(model: ClassModel, uc: UseCase) -> str:
    """The full prompt text (system body followed by the user body)."""
    system, user = prompt_messages(model, uc)
    return f"{system}\n\n{user}"


# --- reply handling ----------------------------------------------------------------

_FENCE_RE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)


def first_fenced_block(reply: str) -> str:
    match = _FENCE_RE.search(reply)
    if not match:
        raise MalformedReply("reply contains no fenced code block")
    return match.group(1)


def suggestions_from_reply(
    model: ClassModel, reply: str, uc_id: str, backend_name: str
) -> SuggestionSet:
    """Pure reply→suggestions function; replaying a recorded reply is exact."""
    block = first_fenced_block(reply)
    try:
        replied = parse(block)
    except ParseError as exc:
        raise MalformedReply(f"fenced block is not parseable PlantUML: {exc}") from exc
    return extract_suggestions(
        model,
        replied,
        source_uc=uc_id,
        backend_name=backend_name,
        raw_reply=reply,
    )


# --- LLM backend --------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class LlmConfig:
    base_url: str
    model_name: str
    api_key_env_var: str = "OPENAI_API_KEY"
    timeout: float = 30.0
    max_retries: int = 3
    temperature: float = 0.0

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise InvariantViolation("timeout must be positive")
        if self.max_retries < 0:
            raise InvariantViolation("max_retries must be >= 0")


class _RetryableFailure(Exception):
    """Internal marker: worth another attempt (5xx or transport trouble)."""


def _urllib_post(url: str, body: bytes, headers: dict, timeout: float) -> tuple[int, str]:
    request = urllib.request.Request(url, data=body, headers=headers, method="POST")
    try:
        with urllib.request.urlopen(request, timeout=timeout) as response:
            return response.status, response.read().decode("utf-8")
    except urllib.error.HTTPError as exc:
        return exc.code, exc.read().decode("utf-8", errors="replace")
    except (urllib.error.URLError, OSError) as exc:
        raise _RetryableFailure(str(exc)) from exc


_BACKOFF_INITIAL = 1.0
_BACKOFF_CAP = 30.0


def chat_completion(
    cfg: LlmConfig,
    system: str,
    user: str,
    *,
    post: Callable[[str, bytes, dict, float], tuple[int, str]] = _urllib_post,
    sleep: Callable[[float], None] = time.sleep,
) -> str:
    """One chat request with exponential backoff on 5xx/transport failures."""
    api_key = os.environ.get(cfg.api_key_env_var)
    if not api_key:
        raise AuthError(f"environment variable {cfg.api_key_env_var} is not set")
    url = cfg.base_url.rstrip("/") + "/chat/completions"
    body = json.dumps(
        {
            "model": cfg.model_name,
            "temperature": cfg.temperature,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        }
    ).encode("utf-8")
    headers = {
        "Content-Type": "application/json",
        "Authorization": f"Bearer {api_key}",
    }

    backoff = _BACKOFF_INITIAL
    last_failure = "no attempt made"
    for attempt in range(cfg.max_retries + 1):
        if attempt:
            sleep(backoff)
            backoff = min(backoff * 2, _BACKOFF_CAP)
        try:
            status, text = post(url, body, headers, cfg.timeout)
        except _RetryableFailure as exc:
            last_failure = f"transport failure: {exc}"
            continue
        if status in (401, 403):
            raise AuthError(f"endpoint rejected credentials (HTTP {status})")
        if 500 <= status < 600:
            last_failure = f"HTTP {status}"
            continue
        if status != 200:
            raise TransportError(f"unexpected HTTP {status} from {url}")
        try:
            content = json.loads(text)["choices"][0]["message"]["content"]
        except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
            raise MalformedReply(
                "response JSON lacks choices[0].message.content"
            ) from exc
        if not isinstance(content, str):
            raise MalformedReply("choices[0].message.content is not text")
        return content
    raise TransportError(
        f"gave up after {cfg.max_retries + 1} attempts ({last_failure})"
    )


def llm_suggest(
    cfg: LlmConfig,
    model: ClassModel,
    uc: UseCase,
    *,
    post: Callable[[str, bytes, dict, float], tuple[int, str]] = _urllib_post,
    sleep: Callable[[float], None] = time.sleep,
) -> SuggestionSet:
    """Request suggestions for one use case from a chat-completion endpoint."""
    system, user = prompt_messages(model, uc)
    reply = chat_completion(cfg, system, user, post=post, sleep=sleep)
    return suggestions_from_reply(model, reply, uc.id, f"llm:{cfg.model_name}")


# --- rules backend --------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class MappingConfig:
    """Parsed rules file: use-case ID -> suggestion templates."""

    entries: tuple[tuple[str, tuple[Suggestion, ...]], ...] = ()

    def canonicalized(self, aliases: tuple[tuple[str, str], ...]) -> "MappingConfig":
        """Resolve entry keys through an alias map (merging aliased entries)."""
        alias_map = dict(aliases)
        merged: dict[str, list[Suggestion]] = {}
        order: list[str] = []
        for uc_id, suggestions in self.entries:
            canonical = alias_map.get(uc_id, uc_id)
            if canonical not in merged:
                merged[canonical] = []
                order.append(canonical)
            merged[canonical].extend(suggestions)
        return MappingConfig(
            entries=tuple((uc_id, tuple(merged[uc_id])) for uc_id in order)
        )

    def lookup(self, uc_id: str) -> tuple[Suggestion, ...]:
        for entry_id, suggestions in self.entries:
            if entry_id == uc_id:
                return suggestions
        return ()


def load_mapping(path: Path) -> MappingConfig:
    """Load a rules mapping file (JSON array of {use_case, suggestions})."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MappingError(f"cannot read rules mapping {path}: {exc}") from exc
    if not isinstance(data, list):
        raise MappingError("rules mapping must be a JSON array")
    entries: list[tuple[str, tuple[Suggestion, ...]]] = []
    for entry in data:
        try:
            uc_id = entry["use_case"]
            if not re.fullmatch(r"UC\d+", uc_id):
                raise MappingError(f"bad use-case id in rules mapping: {uc_id!r}")
            suggestions = tuple(
                suggestion_from_json({**item, "source_uc": uc_id})
                for item in entry["suggestions"]
            )
        except (KeyError, TypeError, ParseError, InvariantViolation) as exc:
            raise MappingError(f"bad rules mapping entry: {exc}") from exc
        entries.append((uc_id, suggestions))
    return MappingConfig(entries=tuple(entries))


def rules_suggest(mapping: MappingConfig, model: ClassModel, uc: UseCase) -> SuggestionSet:
    """Deterministic suggestions for ``uc`` straight from the mapping.

    The mapping is expected to be canonicalized against the corpus aliases;
    IDs with no entry yield an empty set. An add_method naming a class that
    neither exists in the model nor is introduced by an add_class mapped at
    or before this use case is a MappingError (a mapping-file defect). A
    class whose add_class was merely *rejected* by the reviewer is not: that
    case surfaces as UnknownClass if the dependent method is accepted.
    """
    raw = mapping.lookup(uc.id)
    suggestions = tuple(
        replace(s, source_uc=uc.id, rationale=s.rationale or f"rules mapping entry for {uc.id}")
        for s in raw
    )
    known = set(model.class_names)
    uc_number = int(uc.id[2:])
    for entry_id, entry_suggestions in mapping.entries:
        if int(entry_id[2:]) <= uc_number:
            known.update(
                s.class_def.name for s in entry_suggestions if s.kind == ADD_CLASS
            )
    for s in suggestions:
        if s.kind == ADD_METHOD and s.class_name not in known:
            raise MappingError(
                f"{uc.id}: class {s.class_name!r} is absent and no add_class is mapped first"
            )
    try:
        return SuggestionSet(suggestions=suggestions, backend_name="rules")
    except InvariantViolation as exc:
        raise MappingError(f"{uc.id}: {exc}") from exc


# --- uniform backend objects -------------------------------------------------------------

class RulesBackend:
    """Suggestion backend driven by a rules mapping file."""

    def __init__(self, mapping: MappingConfig):
        self.mapping = mapping
        self.name = "rules"

    @classmethod
    def from_file(cls, path: Path, aliases: tuple[tuple[str, str], ...] = ()) -> "RulesBackend":
        return cls(load_mapping(path).canonicalized(aliases))

    def suggest(self, model: ClassModel, uc: UseCase) -> SuggestionSet:
        return rules_suggest(self.mapping, model, uc)


class LlmBackend:
    """Suggestion backend speaking the chat-completions wire protocol."""

    def __init__(
        self,
        cfg: LlmConfig,
        *,
        post: Callable[[str, bytes, dict, float], tuple[int, str]] = _urllib_post,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.cfg = cfg
        self.name = f"llm:{cfg.model_name}"
        self._post = post
        self._sleep = sleep

    def suggest(self, model: ClassModel, uc: UseCase) -> SuggestionSet:
        return llm_suggest(self.cfg, model, uc, post=self._post, sleep=self._sleep)
