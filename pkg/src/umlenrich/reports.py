"""Validation artifacts for an enriched model: metrics, traceability back to
use cases, relationship validation, gap listing, and naming/type lint.

Every report is a plain value with lossless JSON (de)serialization plus an
aligned plain-text rendering for humans.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .diffmerge import ModelDelta
from .errors import InvariantViolation, MappingError, UnknownUseCase
from .model import ClassModel, Relationship, TypeRegistry, find_class, referenced_types
from .plantuml import parse_relationship, render_relationship
from .session import Session
from .suggest import ADD_METHOD
from .usecases import Corpus

_LOWER_CAMEL_RE = re.compile(r"[a-z][A-Za-z0-9]*\Z")
_UPPER_CAMEL_RE = re.compile(r"[A-Z][A-Za-z0-9]*\Z")


# --- metrics ---------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Metrics:
    class_count: int
    method_count: int
    relationship_count: int
    dynamic_behaviors_captured: bool

    def to_dict(self) -> dict:
        return {
            "class_count": self.class_count,
            "method_count": self.method_count,
            "relationship_count": self.relationship_count,
            "dynamic_behaviors_captured": self.dynamic_behaviors_captured,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Metrics":
        return cls(
            class_count=data["class_count"],
            method_count=data["method_count"],
            relationship_count=data["relationship_count"],
            dynamic_behaviors_captured=data["dynamic_behaviors_captured"],
        )


def metrics(model: ClassModel) -> Metrics:
    """Counts by direct enumeration; relationships include generalizations."""
    method_count = sum(len(c.methods) for c in model.classes)
    return Metrics(
        class_count=len(model.classes),
        method_count=method_count,
        relationship_count=len(model.relationships),
        dynamic_behaviors_captured=method_count > 0,
    )


# --- traceability ------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class TraceabilityRow:
    use_case_id: str  # canonical, post alias resolution
    class_name: str
    signature: str
    decision: str  # accepted | rejected | edited | pending

    def to_dict(self) -> dict:
        return {
            "use_case_id": self.use_case_id,
            "class": self.class_name,
            "signature": self.signature,
            "decision": self.decision,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TraceabilityRow":
        return cls(data["use_case_id"], data["class"], data["signature"], data["decision"])


@dataclass(frozen=True, slots=True)
class TraceabilityMatrix:
    rows: tuple[TraceabilityRow, ...] = ()

    def pairs(self) -> set[tuple[str, str]]:
        """The (use case, signature) projection — the paper-table view."""
        return {(r.use_case_id, r.signature) for r in self.rows}

    def to_json(self) -> str:
        return json.dumps([r.to_dict() for r in self.rows], indent=2)

    @classmethod
    def from_json(cls, text: str) -> "TraceabilityMatrix":
        return cls(rows=tuple(TraceabilityRow.from_dict(d) for d in json.loads(text)))

    def render_text(self) -> str:
        return _render_table(
            ("Use case", "Class", "Method", "Decision"),
            [(r.use_case_id, r.class_name, r.signature, r.decision) for r in self.rows],
        )


def traceability(model: ClassModel, corpus: Corpus, session: Session) -> TraceabilityMatrix:
    """Method-suggestion decisions keyed to canonical use-case IDs.

    A signature that landed on several classes for the same use case folds
    into one row (the class applied first), mirroring how the validation
    table reports a method once per motivating use case.
    """
    rows: list[TraceabilityRow] = []
    seen: set[tuple[str, str, str]] = set()
    for iteration in session.iterations:
        canonical = corpus.resolve(iteration.use_case_id)
        if canonical is None:
            raise UnknownUseCase(
                f"iteration cites unknown use case {iteration.use_case_id!r}"
            )
        for suggestion, decision in zip(iteration.suggestions, iteration.decisions):
            effective = decision.edited if decision.kind == "edited" else suggestion
            if effective.kind != ADD_METHOD:
                continue
            signature = effective.method.render_signature()
            key = (canonical, signature, decision.kind)
            if key in seen:
                continue
            seen.add(key)
            if decision.kind in ("accepted", "edited"):
                target = find_class(model, effective.class_name)
                if target is None or target.find_method(effective.method.signature) is None:
                    raise InvariantViolation(
                        f"accepted method {effective.class_name}."
                        f"{signature} is not present in the model"
                    )
            rows.append(
                TraceabilityRow(
                    use_case_id=canonical,
                    class_name=effective.class_name,
                    signature=signature,
                    decision=decision.kind,
                )
            )
    return TraceabilityMatrix(rows=tuple(rows))


# --- relationship validation -----------------------------------------------------

@dataclass(frozen=True, slots=True)
class RelationshipValidationRow:
    relationship: str
    use_case_ids: tuple[str, ...]
    mapped: bool

    def to_dict(self) -> dict:
        return {
            "relationship": self.relationship,
            "use_case_ids": list(self.use_case_ids),
            "mapped": self.mapped,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RelationshipValidationRow":
        return cls(data["relationship"], tuple(data["use_case_ids"]), data["mapped"])


@dataclass(frozen=True, slots=True)
class RelationshipValidationReport:
    rows: tuple[RelationshipValidationRow, ...] = ()

    @property
    def flagged(self) -> int:
        return sum(1 for r in self.rows if not r.mapped)

    def to_json(self) -> str:
        return json.dumps([r.to_dict() for r in self.rows], indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RelationshipValidationReport":
        return cls(
            rows=tuple(RelationshipValidationRow.from_dict(d) for d in json.loads(text))
        )

    def render_text(self) -> str:
        return _render_table(
            ("Added relationship", "Use cases", "Mapped"),
            [
                (r.relationship, ", ".join(r.use_case_ids) or "-", "yes" if r.mapped else "FLAGGED")
                for r in self.rows
            ],
        )


RelationshipMap = tuple[tuple[Relationship, tuple[str, ...]], ...]


def load_relationship_map(path: Path) -> RelationshipMap:
    """Read a JSON array of {relationship, use_cases} rows."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MappingError(f"cannot read relationship map {path}: {exc}") from exc
    if not isinstance(data, list):
        raise MappingError("relationship map must be a JSON array")
    out = []
    for entry in data:
        try:
            rel = parse_relationship(entry["relationship"])
            ucs = tuple(entry["use_cases"])
        except Exception as exc:
            raise MappingError(f"bad relationship map entry: {exc}") from exc
        out.append((rel, ucs))
    return tuple(out)


def relationship_validation(
    delta: ModelDelta, mapping: RelationshipMap = ()
) -> RelationshipValidationReport:
    """Pair each added relationship with the use cases the map assigns."""
    by_key = {rel.key(): ucs for rel, ucs in mapping}
    rows = []
    for rel in delta.added_relationships:
        ucs = by_key.get(rel.key(), ())
        rows.append(
            RelationshipValidationRow(
                relationship=render_relationship(rel),
                use_case_ids=tuple(ucs),
                mapped=bool(ucs),
            )
        )
    return RelationshipValidationReport(rows=tuple(rows))


# --- gaps -----------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class GapReport:
    methodless_classes: tuple[str, ...] = ()
    uncovered_use_cases: tuple[tuple[str, str], ...] = ()  # (id, note)
    unresolved_parameter_types: tuple[str, ...] = ()

    def to_json(self) -> str:
        return json.dumps(
            {
                "methodless_classes": list(self.methodless_classes),
                "uncovered_use_cases": [list(pair) for pair in self.uncovered_use_cases],
                "unresolved_parameter_types": list(self.unresolved_parameter_types),
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "GapReport":
        data = json.loads(text)
        return cls(
            methodless_classes=tuple(data["methodless_classes"]),
            uncovered_use_cases=tuple(
                (uc, note) for uc, note in data["uncovered_use_cases"]
            ),
            unresolved_parameter_types=tuple(data["unresolved_parameter_types"]),
        )

    def render_text(self) -> str:
        sections = [
            "Classes without methods:",
            *(f"  {name}" for name in self.methodless_classes),
            "Use cases without accepted suggestions:",
            *(f"  {uc}: {note}" for uc, note in self.uncovered_use_cases),
            "Unresolved parameter/return types:",
            *(f"  {name}" for name in self.unresolved_parameter_types),
        ]
        return "\n".join(sections) + "\n"


def gaps(
    model: ClassModel,
    corpus: Corpus,
    session: Session,
    registry: TypeRegistry,
) -> GapReport:
    """What the enrichment did not reach: empty classes, idle use cases,
    parameter types that resolve nowhere."""
    methodless = tuple(sorted(c.name for c in model.classes if not c.methods))
    covered: set[str] = set()
    for iteration in session.iterations:
        canonical = corpus.resolve(iteration.use_case_id) or iteration.use_case_id
        if any(d.kind in ("accepted", "edited") for d in iteration.decisions):
            covered.add(canonical)
    uncovered = tuple(
        (case.id, "no accepted suggestions")
        for case in corpus.cases
        if case.id not in covered
    )
    unresolved = tuple(
        sorted(t for t in referenced_types(model) if not registry.resolvable(t))
    )
    return GapReport(
        methodless_classes=methodless,
        uncovered_use_cases=uncovered,
        unresolved_parameter_types=unresolved,
    )


# --- lint ------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class LintFinding:
    category: str  # method-name | class-name | unresolved-type | duplicate-association
    subject: str
    message: str

    def to_dict(self) -> dict:
        return {"category": self.category, "subject": self.subject, "message": self.message}

    @classmethod
    def from_dict(cls, data: dict) -> "LintFinding":
        return cls(data["category"], data["subject"], data["message"])


@dataclass(frozen=True, slots=True)
class LintReport:
    findings: tuple[LintFinding, ...] = ()

    def __bool__(self) -> bool:
        return bool(self.findings)

    def to_json(self) -> str:
        return json.dumps([f.to_dict() for f in self.findings], indent=2)

    @classmethod
    def from_json(cls, text: str) -> "LintReport":
        return cls(findings=tuple(LintFinding.from_dict(d) for d in json.loads(text)))

    def render_text(self) -> str:
        if not self.findings:
            return "no lint findings\n"
        return _render_table(
            ("Category", "Subject", "Message"),
            [(f.category, f.subject, f.message) for f in self.findings],
        )


def lint(model: ClassModel, registry: Optional[TypeRegistry] = None) -> LintReport:
    """Naming-convention, unresolved-type, and duplicate-edge findings."""
    findings: list[LintFinding] = []
    for cls in model.classes:
        if not _UPPER_CAMEL_RE.match(cls.name):
            findings.append(
                LintFinding("class-name", cls.name, "class names should be UpperCamelCase")
            )
        for method in cls.methods:
            if not _LOWER_CAMEL_RE.match(method.name):
                findings.append(
                    LintFinding(
                        "method-name",
                        f"{cls.name}.{method.name}",
                        "method names should be lowerCamelCase",
                    )
                )
    if registry is not None:
        for type_name, sites in sorted(referenced_types(model).items()):
            if not registry.resolvable(type_name):
                findings.append(
                    LintFinding(
                        "unresolved-type",
                        type_name,
                        "not a primitive, class, or declared auxiliary type "
                        f"(used by {', '.join(sorted(set(sites)))})",
                    )
                )
    counts: dict[tuple, int] = {}
    for rel in model.relationships:
        counts[rel.key()] = counts.get(rel.key(), 0) + 1
    for rel in model.relationships:
        if counts.get(rel.key(), 0) > 1:
            counts[rel.key()] = 0  # report each duplicated edge once
            findings.append(
                LintFinding(
                    "duplicate-association",
                    render_relationship(rel),
                    "identical relationship declared more than once",
                )
            )
    return LintReport(findings=tuple(findings))


# --- shared text table -------------------------------------------------------------

def _render_table(header: tuple[str, ...], rows: list[tuple[str, ...]]) -> str:
    widths = [len(h) for h in header]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def fmt(row: tuple[str, ...]) -> str:
        return "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
    lines = [fmt(header), fmt(tuple("-" * w for w in widths))]
    lines.extend(fmt(row) for row in rows)
    return "\n".join(lines) + "\n"
