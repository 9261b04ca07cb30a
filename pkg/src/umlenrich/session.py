"""Persisted enrichment sessions.

A session is one JSON file (format-versioned) recording, per use case: the
suggestions a backend produced, the reviewer's per-suggestion decisions, and
a validation summary — plus the printed snapshot of the current model. The
file is rewritten atomically after every iteration, so an interrupted run
resumes exactly where it stopped, and the snapshot can always be re-derived
by replaying the accepted decisions from the base diagram.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import SessionError
from .model import ClassModel, canonical_equal
from .plantuml import parse, render
from .suggest import (
    Suggestion,
    SuggestionSet,
    apply_suggestions,
    suggestion_from_json,
    suggestion_to_json,
)

FORMAT_VERSION = 1

DECISION_ACCEPTED = "accepted"
DECISION_REJECTED = "rejected"
DECISION_EDITED = "edited"


@dataclass(frozen=True, slots=True)
class Decision:
    kind: str
    edited: Optional[Suggestion] = None

    def __post_init__(self) -> None:
        if self.kind not in (DECISION_ACCEPTED, DECISION_REJECTED, DECISION_EDITED):
            raise SessionError(f"unknown decision kind: {self.kind!r}")
        if (self.kind == DECISION_EDITED) != (self.edited is not None):
            raise SessionError("edited decisions (and only those) carry a payload")

    @property
    def applied(self) -> bool:
        return self.kind in (DECISION_ACCEPTED, DECISION_EDITED)


@dataclass(slots=True)
class IterationRecord:
    use_case_id: str
    suggestions: SuggestionSet
    decisions: tuple[Decision, ...]
    validation_summary: dict

    def __post_init__(self) -> None:
        if len(self.decisions) != len(self.suggestions):
            raise SessionError(
                f"{self.use_case_id}: one decision per suggestion required"
            )

    def effective_accepted(self) -> tuple[Suggestion, ...]:
        out = []
        for suggestion, decision in zip(self.suggestions, self.decisions):
            if decision.kind == DECISION_ACCEPTED:
                out.append(suggestion)
            elif decision.kind == DECISION_EDITED:
                out.append(decision.edited)
        return tuple(out)


@dataclass(slots=True)
class Session:
    base_diagram_path: str
    corpus_path: str
    backend_spec: dict
    iterations: list[IterationRecord] = field(default_factory=list)
    current_model_snapshot: str = ""
    last_error: Optional[dict] = None
    format_version: int = FORMAT_VERSION

    def done_ids(self) -> set[str]:
        return {record.use_case_id for record in self.iterations}


def _suggestion_set_to_json(sset: SuggestionSet) -> dict:
    return {
        "backend_name": sset.backend_name,
        "raw_reply": sset.raw_reply,
        "suggestions": [suggestion_to_json(s) for s in sset],
    }


def _suggestion_set_from_json(data: dict) -> SuggestionSet:
    return SuggestionSet(
        suggestions=tuple(suggestion_from_json(d) for d in data["suggestions"]),
        backend_name=data.get("backend_name", ""),
        raw_reply=data.get("raw_reply"),
    )


def _decision_to_json(decision: Decision):
    if decision.kind == DECISION_EDITED:
        return {"edited": suggestion_to_json(decision.edited)}
    return decision.kind


def _decision_from_json(data) -> Decision:
    if isinstance(data, str):
        return Decision(kind=data)
    if isinstance(data, dict) and "edited" in data:
        return Decision(kind=DECISION_EDITED, edited=suggestion_from_json(data["edited"]))
    raise SessionError(f"unreadable decision entry: {data!r}")


def session_to_json(session: Session) -> str:
    return json.dumps(
        {
            "format_version": session.format_version,
            "base_diagram_path": session.base_diagram_path,
            "corpus_path": session.corpus_path,
            "backend": session.backend_spec,
            "iterations": [
                {
                    "use_case_id": record.use_case_id,
                    "suggestions": _suggestion_set_to_json(record.suggestions),
                    "decisions": [_decision_to_json(d) for d in record.decisions],
                    "validation_summary": record.validation_summary,
                }
                for record in session.iterations
            ],
            "current_model_snapshot": session.current_model_snapshot,
            "last_error": session.last_error,
        },
        indent=2,
    )


def session_from_json(text: str) -> Session:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SessionError(f"session file is not valid JSON: {exc}") from exc
    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise SessionError(f"unsupported session format version: {version!r}")
    try:
        iterations = [
            IterationRecord(
                use_case_id=item["use_case_id"],
                suggestions=_suggestion_set_from_json(item["suggestions"]),
                decisions=tuple(_decision_from_json(d) for d in item["decisions"]),
                validation_summary=item.get("validation_summary", {}),
            )
            for item in data.get("iterations", [])
        ]
        session = Session(
            base_diagram_path=data["base_diagram_path"],
            corpus_path=data["corpus_path"],
            backend_spec=data.get("backend", {}),
            iterations=iterations,
            current_model_snapshot=data.get("current_model_snapshot", ""),
            last_error=data.get("last_error"),
        )
    except (KeyError, TypeError) as exc:
        raise SessionError(f"session file is missing fields: {exc}") from exc
    numbers = [int(record.use_case_id[2:]) for record in session.iterations]
    if numbers != sorted(numbers):
        raise SessionError("session iterations are not in ascending use-case order")
    return session


def save_session(session: Session, path: Path) -> None:
    """Atomic write: the file on disk is always a complete session."""
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(session_to_json(session), encoding="utf-8")
    os.replace(tmp, path)


def load_session(path: Path) -> Session:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SessionError(f"cannot read session {path}: {exc}") from exc
    return session_from_json(text)


def replay_model(session: Session, base: ClassModel) -> ClassModel:
    """Re-derive the model from the base plus all accepted decisions."""
    model = base
    for record in session.iterations:
        for suggestion in record.effective_accepted():
            model = apply_suggestions(
                model, SuggestionSet(suggestions=(suggestion,), backend_name="replay")
            )
    return model


def verify_integrity(session: Session, base: ClassModel) -> ClassModel:
    """Check the stored snapshot equals the replayed model; return the model."""
    model = replay_model(session, base)
    if session.current_model_snapshot:
        snapshot = parse(session.current_model_snapshot)
        if not canonical_equal(snapshot, model):
            raise SessionError(
                "session snapshot does not match the replay of accepted decisions"
            )
    return model


def fresh_snapshot(model: ClassModel) -> str:
    return render(model)
