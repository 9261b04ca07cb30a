"""Ingestion of natural-language use-case tables.

A use case is one Markdown document: a level-2 heading ``## UC<n>: <title>``
followed by a two-column table keyed Actor / Use Case / Description /
Pre-conditions / Triggers / Main Scenario / Post-conditions / Extensions /
Relationships ("Exceptions" is accepted as a synonym for "Extensions").
Cells holding numbered lists (``1. ... 2. ...``) split into ordered items;
a literal ``N/A`` cell yields an empty list flagged as explicit.

A corpus is a directory of ``*.md`` files plus an optional ``aliases`` file
(``alias canonical`` per line) that reconciles alternative use-case numbers
with the canonical ones.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import DuplicateId, DuplicateKey, SchemaError

_HEADING_RE = re.compile(r"##\s+(UC\d+)\s*:\s*(.+?)\s*\Z")
_ROW_RE = re.compile(r"\|(.+)\|\s*\Z")
_NUMBERED_SPLIT_RE = re.compile(r"\s*\b\d+\.\s+")
_ID_RE = re.compile(r"UC[0-9]+\Z")

# Required row labels, in the order SchemaError reports the first missing one.
_REQUIRED_ROWS = (
    "Actor",
    "Use Case",
    "Description",
    "Pre-conditions",
    "Triggers",
    "Main Scenario",
    "Post-conditions",
    "Extensions",
    "Relationships",
)


def _normalize_key(label: str) -> str:
    key = re.sub(r"[\s\-]+", "", label).lower()
    if key == "exceptions":  # §-style column name vs. table row label
        key = "extensions"
    return key


@dataclass(frozen=True, slots=True)
class UseCase:
    id: str
    title: str
    actor: str
    description: str
    preconditions: tuple[str, ...] = ()
    triggers: tuple[str, ...] = ()
    main_scenario: tuple[str, ...] = ()
    postconditions: tuple[str, ...] = ()
    extensions: tuple[str, ...] = ()
    relationships: tuple[str, ...] = ()
    extensions_explicit_na: bool = False
    relationships_explicit_na: bool = False

    def __post_init__(self) -> None:
        if not _ID_RE.match(self.id):
            raise SchemaError("Use Case ID", f"bad use-case id: {self.id!r}")
        if not self.actor.strip():
            raise SchemaError("Actor", "actor must be nonempty")
        if not self.main_scenario:
            raise SchemaError("Main Scenario", "main scenario needs at least one step")

    @property
    def number(self) -> int:
        return int(self.id[2:])


@dataclass(frozen=True, slots=True)
class Corpus:
    cases: tuple[UseCase, ...] = ()
    id_aliases: tuple[tuple[str, str], ...] = ()  # (alias, canonical) pairs

    def __post_init__(self) -> None:
        ids = [c.id for c in self.cases]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise DuplicateId(f"duplicate use-case id(s): {', '.join(dupes)}")
        canonical = set(ids)
        seen_aliases: set[str] = set()
        for alias, target in self.id_aliases:
            if alias in canonical:
                raise DuplicateId(f"alias {alias!r} collides with a canonical id")
            if alias in seen_aliases:
                raise DuplicateId(f"alias {alias!r} declared twice")
            if target not in canonical:
                raise DuplicateId(f"alias {alias!r} points at unknown id {target!r}")
            seen_aliases.add(alias)

    def resolve(self, uc_id: str) -> Optional[str]:
        """Canonical ID for ``uc_id`` (itself, its alias target, or None)."""
        if any(c.id == uc_id for c in self.cases):
            return uc_id
        for alias, target in self.id_aliases:
            if alias == uc_id:
                return target
        return None

    def find(self, uc_id: str) -> Optional[UseCase]:
        canonical = self.resolve(uc_id)
        if canonical is None:
            return None
        return next(c for c in self.cases if c.id == canonical)


def _split_cell(cell: str) -> tuple[tuple[str, ...], bool]:
    """Split one table cell into list items; second value flags literal N/A."""
    text = cell.strip()
    if text == "N/A":
        return (), True
    if not text:
        return (), False
    if re.match(r"1\.\s", text):
        items = [part.strip() for part in _NUMBERED_SPLIT_RE.split(text) if part.strip()]
        return tuple(items), False
    return (text,), False


def parse_usecase(text: str) -> UseCase:
    """Parse one Markdown use-case document."""
    uc_id = title = None
    rows: dict[str, str] = {}
    for raw in text.replace("\r\n", "\n").split("\n"):
        line = raw.strip()
        heading = _HEADING_RE.match(line)
        if heading and uc_id is None:
            uc_id, title = heading.group(1), heading.group(2)
            continue
        row = _ROW_RE.match(line)
        if not row:
            continue
        cells = [c.strip() for c in row.group(1).split("|")]
        if len(cells) != 2:
            continue
        label, value = cells
        if not label or set(label) <= set("-: "):
            continue
        key = _normalize_key(label)
        if key == "attribute":  # table header row
            continue
        if key in rows:
            raise DuplicateKey(f"repeated row: {label!r}")
        rows[key] = value

    if uc_id is None:
        raise SchemaError("Use Case ID", "missing '## UC<n>: <title>' heading")
    for label in _REQUIRED_ROWS:
        if _normalize_key(label) not in rows:
            raise SchemaError(label)

    main_scenario, _ = _split_cell(rows["mainscenario"])
    preconditions, _ = _split_cell(rows["preconditions"])
    triggers, _ = _split_cell(rows["triggers"])
    postconditions, _ = _split_cell(rows["postconditions"])
    extensions, extensions_na = _split_cell(rows["extensions"])
    relationships, relationships_na = _split_cell(rows["relationships"])
    return UseCase(
        id=uc_id,
        title=title,
        actor=rows["actor"],
        description=rows["description"],
        preconditions=preconditions,
        triggers=triggers,
        main_scenario=main_scenario,
        postconditions=postconditions,
        extensions=extensions,
        relationships=relationships,
        extensions_explicit_na=extensions_na,
        relationships_explicit_na=relationships_na,
    )


def _render_cell(items: tuple[str, ...], explicit_na: bool) -> str:
    if explicit_na:
        return "N/A"
    if not items:
        return ""
    if len(items) == 1:
        return items[0]
    return " ".join(f"{i}. {item}" for i, item in enumerate(items, start=1))


def render_usecase(uc: UseCase) -> str:
    """Canonical Markdown for a use case; inverse of :func:`parse_usecase`."""
    rows = [
        ("Actor", uc.actor),
        ("Use Case", uc.title),
        ("Description", uc.description),
        ("Pre-conditions", _render_cell(uc.preconditions, False)),
        ("Triggers", _render_cell(uc.triggers, False)),
        ("Main Scenario", _render_cell(uc.main_scenario, False)),
        ("Post-conditions", _render_cell(uc.postconditions, False)),
        ("Extensions", _render_cell(uc.extensions, uc.extensions_explicit_na)),
        ("Relationships", _render_cell(uc.relationships, uc.relationships_explicit_na)),
    ]
    lines = [f"## {uc.id}: {uc.title}", "", "| Attribute | Details |", "| --- | --- |"]
    lines.extend(f"| {label} | {value} |" for label, value in rows)
    return "\n".join(lines) + "\n"


def load_aliases(path: Path) -> tuple[tuple[str, str], ...]:
    """Read an ``alias canonical`` map, one pair per line, '#' comments allowed."""
    pairs: list[tuple[str, str]] = []
    for line_no, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise SchemaError("aliases", f"{path.name}:{line_no}: expected 'alias canonical'")
        pairs.append((parts[0], parts[1]))
    return tuple(pairs)


def load_corpus(directory: Path) -> Corpus:
    """Load every ``*.md`` use case under ``directory`` plus its alias map.

    Cases come back sorted by numeric ID regardless of file enumeration
    order; parse failures are re-raised with the offending filename.
    """
    directory = Path(directory)
    cases: list[UseCase] = []
    seen: dict[str, str] = {}
    for path in sorted(directory.glob("*.md")):
        try:
            case = parse_usecase(path.read_text(encoding="utf-8"))
        except SchemaError as exc:
            raise SchemaError(exc.key, f"{path.name}: {exc}") from exc
        except DuplicateKey as exc:
            raise DuplicateKey(f"{path.name}: {exc}") from exc
        if case.id in seen:
            raise DuplicateId(
                f"{case.id} declared in both {seen[case.id]} and {path.name}"
            )
        seen[case.id] = path.name
        cases.append(case)
    cases.sort(key=lambda c: c.number)
    aliases_path = directory / "aliases"
    aliases = load_aliases(aliases_path) if aliases_path.exists() else ()
    return Corpus(cases=tuple(cases), id_aliases=aliases)
