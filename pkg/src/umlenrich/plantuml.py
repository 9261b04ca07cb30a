"""Parser and canonical printer for a class-diagram subset of PlantUML.

The grammar is line-oriented:

* ``@startuml`` ... ``@enduml`` bracket the diagram; lines starting with
  ``'`` are comments; blank lines are insignificant *outside* class bodies.
* ``!define ALIAS class`` registers ALIAS as a class keyword (the only
  preprocessor form accepted — anything else is an UnknownDirective).
* ``<keyword> Name {`` opens a class body holding one member per logical
  line: ``+name: Type`` attributes and ``+name(p: T, ...): R`` methods. A
  member line with unbalanced parentheses is joined with following physical
  lines until the parentheses balance, which is how wrapped signatures in
  real-world sources are accepted.
* ``Child --|> Parent`` and ``A "m" -- "n" B : label`` declare relationships.

Parsing is fail-fast: the first malformed construct raises :class:`ParseError`
with a 1-based source span. The printer is canonical — aliases, classes,
members, and relationships are emitted in sorted order, so any two models
that compare canonically equal print byte-identical text, and printing is
idempotent through a parse/print cycle.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

from .errors import InvariantViolation, UmlEnrichError
from .model import (
    Association,
    Attribute,
    ClassDef,
    ClassModel,
    Generalization,
    Method,
    Parameter,
    Relationship,
    Visibility,
    generalization_cycle,
)


@dataclass(frozen=True, slots=True)
class SourceSpan:
    line: int  # 1-based
    column: int = 1

    def __post_init__(self) -> None:
        if self.line < 1 or self.column < 1:
            raise ValueError("source spans are 1-based")


class ParseErrorKind(Enum):
    MISSING_START = "MissingStart"
    MISSING_END = "MissingEnd"
    BAD_MEMBER_LINE = "BadMemberLine"
    BAD_RELATIONSHIP_LINE = "BadRelationshipLine"
    UNBALANCED_BRACES = "UnbalancedBraces"
    UNKNOWN_DIRECTIVE = "UnknownDirective"


class ParseError(UmlEnrichError):
    def __init__(self, span: SourceSpan, kind: ParseErrorKind, message: str):
        if not message:
            raise ValueError("parse errors carry a nonempty message")
        super().__init__(f"line {span.line}: {message}")
        self.span = span
        self.kind = kind
        self.message = message


_DEFINE_RE = re.compile(r"!define\s+([A-Za-z_][A-Za-z0-9_]*)\s+(\S+)\s*\Z")
_CLASS_HEADER_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s+([A-Za-z_][A-Za-z0-9_]*)\s*\{\Z")
_GENERALIZATION_RE = re.compile(
    r"([A-Za-z_][A-Za-z0-9_]*)\s*--\|>\s*([A-Za-z_][A-Za-z0-9_]*)\s*\Z"
)
_ASSOCIATION_RE = re.compile(
    r"([A-Za-z_][A-Za-z0-9_]*)\s+\"([^\"]*)\"\s+--\s+\"([^\"]*)\"\s+"
    r"([A-Za-z_][A-Za-z0-9_]*)\s*(?::\s*(\S+)\s*)?\Z"
)
_ATTRIBUTE_RE = re.compile(
    r"([+\-#~]?)\s*([A-Za-z_][A-Za-z0-9_]*)\s*:\s*([A-Za-z_][A-Za-z0-9_]*)\s*\Z"
)
_METHOD_RE = re.compile(
    r"([+\-#~]?)\s*([A-Za-z_][A-Za-z0-9_]*)\s*\((.*)\)\s*(?::\s*([A-Za-z_][A-Za-z0-9_]*)\s*)?\Z"
)
_PARAM_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*:\s*([A-Za-z_][A-Za-z0-9_]*)\Z")


def _bad_member(line: int, message: str) -> ParseError:
    return ParseError(SourceSpan(line), ParseErrorKind.BAD_MEMBER_LINE, message)


def parse_member(text: str, line: int = 1) -> Union[Attribute, Method]:
    """Parse one member line (leading visibility marker optional)."""
    stripped = text.strip()
    if "(" in stripped:
        match = _METHOD_RE.match(stripped)
        if not match:
            raise _bad_member(line, f"malformed method: {stripped!r}")
        marker, name, params_text, return_type = match.groups()
        params = []
        if params_text.strip():
            for chunk in params_text.split(","):
                pmatch = _PARAM_RE.match(chunk.strip())
                if not pmatch:
                    raise _bad_member(line, f"malformed parameter: {chunk.strip()!r}")
                params.append(Parameter(pmatch.group(1), pmatch.group(2)))
        try:
            return Method(
                name=name,
                params=tuple(params),
                return_type=return_type or "void",
                visibility=Visibility.from_marker(marker) if marker else Visibility.PUBLIC,
            )
        except InvariantViolation as exc:
            raise _bad_member(line, str(exc)) from exc
    match = _ATTRIBUTE_RE.match(stripped)
    if not match:
        raise _bad_member(line, f"malformed member: {stripped!r}")
    marker, name, type_name = match.groups()
    return Attribute(
        name=name,
        type_name=type_name,
        visibility=Visibility.from_marker(marker) if marker else Visibility.PUBLIC,
    )


def parse_relationship(text: str, line: int = 1) -> Relationship:
    """Parse one relationship line; raises on any other statement."""
    stripped = text.strip()
    match = _GENERALIZATION_RE.match(stripped)
    if match:
        return Generalization(child=match.group(1), parent=match.group(2))
    match = _ASSOCIATION_RE.match(stripped)
    if match:
        source, source_mult, target_mult, target, label = (
            match.group(1), match.group(2), match.group(3), match.group(4), match.group(5),
        )
        try:
            return Association(
                source=source,
                source_mult=source_mult,
                target=target,
                target_mult=target_mult,
                label=label,
            )
        except InvariantViolation as exc:
            raise ParseError(
                SourceSpan(line), ParseErrorKind.BAD_RELATIONSHIP_LINE, str(exc)
            ) from exc
    raise ParseError(
        SourceSpan(line),
        ParseErrorKind.BAD_RELATIONSHIP_LINE,
        f"unrecognized statement: {stripped!r}",
    )


class _Parser:
    def __init__(self, text: str):
        normalized = text.replace("\r\n", "\n").replace("\r", "\n")
        self.lines = normalized.split("\n")
        self.pos = 0  # 0-based index into lines

    def error(self, kind: ParseErrorKind, message: str, line: Optional[int] = None) -> ParseError:
        return ParseError(SourceSpan(line or self.pos + 1), kind, message)

    def run(self) -> ClassModel:
        self._skip_to_start()
        aliases: list[tuple[str, str]] = []
        keywords = {"class"}
        classes: list[ClassDef] = []
        seen_names: set[str] = set()
        relationships: list[tuple[int, Relationship]] = []

        while True:
            if self.pos >= len(self.lines):
                raise self.error(
                    ParseErrorKind.MISSING_END,
                    "missing @enduml",
                    line=max(len(self.lines), 1),
                )
            raw = self.lines[self.pos]
            line_no = self.pos + 1
            stripped = raw.strip()
            self.pos += 1

            if not stripped or stripped.startswith("'"):
                continue
            if stripped == "@enduml":
                break
            if stripped.startswith("@"):
                raise self.error(
                    ParseErrorKind.UNKNOWN_DIRECTIVE,
                    f"unexpected directive: {stripped!r}",
                    line=line_no,
                )
            if stripped.startswith("!"):
                match = _DEFINE_RE.match(stripped)
                if not match or match.group(2) != "class":
                    raise self.error(
                        ParseErrorKind.UNKNOWN_DIRECTIVE,
                        f"unsupported directive (only '!define NAME class'): {stripped!r}",
                        line=line_no,
                    )
                alias = match.group(1)
                aliases.append((alias, "class"))
                keywords.add(alias)
                continue
            if stripped == "}":
                raise self.error(
                    ParseErrorKind.UNBALANCED_BRACES,
                    "'}' without an open class body",
                    line=line_no,
                )
            header = _CLASS_HEADER_RE.match(stripped)
            if header:
                keyword, name = header.groups()
                if keyword not in keywords:
                    raise self.error(
                        ParseErrorKind.UNKNOWN_DIRECTIVE,
                        f"unknown class keyword {keyword!r}",
                        line=line_no,
                    )
                if name in seen_names:
                    raise self.error(
                        ParseErrorKind.BAD_MEMBER_LINE,
                        f"duplicate class name {name!r}",
                        line=line_no,
                    )
                seen_names.add(name)
                classes.append(self._class_body(name))
                continue
            relationships.append((line_no, parse_relationship(stripped, line_no)))

        return self._assemble(classes, relationships, aliases)

    def _skip_to_start(self) -> None:
        while self.pos < len(self.lines):
            stripped = self.lines[self.pos].strip()
            if not stripped or stripped.startswith("'"):
                self.pos += 1
                continue
            if stripped == "@startuml":
                self.pos += 1
                return
            raise self.error(
                ParseErrorKind.MISSING_START,
                f"expected @startuml, found {stripped!r}",
            )
        raise self.error(ParseErrorKind.MISSING_START, "missing @startuml", line=1)

    def _class_body(self, name: str) -> ClassDef:
        attributes: list[Attribute] = []
        methods: list[Method] = []
        attr_names: set[str] = set()
        method_sigs: set[tuple] = set()
        while True:
            if self.pos >= len(self.lines):
                raise self.error(
                    ParseErrorKind.UNBALANCED_BRACES,
                    f"class {name!r} body never closed",
                    line=max(len(self.lines), 1),
                )
            raw = self.lines[self.pos]
            line_no = self.pos + 1
            stripped = raw.strip()
            self.pos += 1
            if stripped.startswith("'"):
                continue
            if stripped == "}":
                return ClassDef(name=name, attributes=tuple(attributes), methods=tuple(methods))
            if stripped == "@enduml":
                raise self.error(
                    ParseErrorKind.UNBALANCED_BRACES,
                    f"@enduml inside class {name!r} (missing '}}')",
                    line=line_no,
                )
            if not stripped:
                raise _bad_member(line_no, f"blank line inside class {name!r} body")
            # Join physical lines while parentheses stay unbalanced (wrapped
            # signatures); the member keeps the span of its first line.
            while stripped.count("(") > stripped.count(")"):
                if self.pos >= len(self.lines):
                    raise _bad_member(line_no, f"unbalanced parentheses in member: {stripped!r}")
                stripped = stripped + " " + self.lines[self.pos].strip()
                self.pos += 1
            member = parse_member(stripped, line_no)
            if isinstance(member, Attribute):
                if member.name in attr_names:
                    raise _bad_member(line_no, f"duplicate attribute {member.name!r} in {name!r}")
                attr_names.add(member.name)
                attributes.append(member)
            else:
                if member.signature in method_sigs:
                    raise _bad_member(
                        line_no, f"duplicate method signature {member.render_signature()!r} in {name!r}"
                    )
                method_sigs.add(member.signature)
                methods.append(member)

    def _assemble(
        self,
        classes: list[ClassDef],
        relationships: list[tuple[int, Relationship]],
        aliases: list[tuple[str, str]],
    ) -> ClassModel:
        known = {c.name for c in classes}
        for line_no, rel in relationships:
            for end in rel.endpoints():
                if end not in known:
                    raise self.error(
                        ParseErrorKind.BAD_RELATIONSHIP_LINE,
                        f"relationship endpoint {end!r} is not a declared class",
                        line=line_no,
                    )
        edges: list[tuple[str, str]] = []
        for line_no, rel in relationships:
            if isinstance(rel, Generalization):
                edges.append((rel.child, rel.parent))
                cycle = generalization_cycle(edges)
                if cycle:
                    raise self.error(
                        ParseErrorKind.BAD_RELATIONSHIP_LINE,
                        "generalization cycle: " + " -> ".join(cycle),
                        line=line_no,
                    )
        return ClassModel(
            classes=tuple(classes),
            relationships=tuple(rel for _, rel in relationships),
            macro_aliases=tuple(aliases),
        )


def parse(text: str) -> ClassModel:
    """Parse UTF-8 PlantUML text (LF or CRLF) into a class model."""
    return _Parser(text).run()


def _render_member(member: Union[Attribute, Method]) -> str:
    if isinstance(member, Attribute):
        return f"    {member.visibility.value}{member.name}: {member.type_name}"
    return f"    {member.visibility.value}{member.render_signature()}"


def render(model: ClassModel) -> str:
    """Print the model as canonical PlantUML text (LF, trailing newline).

    Output order is fully canonical — sorted aliases, classes, members, then
    generalizations before associations — so canonically equal models render
    to byte-identical text.
    """
    lines = ["@startuml"]
    aliases = sorted(set(model.macro_aliases))
    for alias, keyword in aliases:
        lines.append(f"!define {alias} {keyword}")
    class_keyword = aliases[0][0] if aliases else "class"
    for cls in sorted(model.classes, key=lambda c: c.name):
        lines.append(f"{class_keyword} {cls.name} {{")
        for attr in sorted(cls.attributes, key=lambda a: a.name):
            lines.append(_render_member(attr))
        for method in sorted(cls.methods, key=lambda m: m.signature):
            lines.append(_render_member(method))
        lines.append("}")
    for gen in sorted(model.generalizations(), key=lambda g: (g.child, g.parent)):
        lines.append(f"{gen.child} --|> {gen.parent}")
    for assoc in sorted(model.associations(), key=lambda a: a.key()):
        line = f'{assoc.source} "{assoc.source_mult}" -- "{assoc.target_mult}" {assoc.target}'
        if assoc.label is not None:
            line += f" : {assoc.label}"
        lines.append(line)
    lines.append("@enduml")
    return "\n".join(lines) + "\n"


def render_relationship(rel: Relationship) -> str:
    """One relationship as a single PlantUML statement (used by reports)."""
    if isinstance(rel, Generalization):
        return f"{rel.child} --|> {rel.parent}"
    line = f'{rel.source} "{rel.source_mult}" -- "{rel.target_mult}" {rel.target}'
    if rel.label is not None:
        line += f" : {rel.label}"
    return line
