"""Typed in-memory representation of a class diagram.

Values are immutable after construction (frozen dataclasses over tuples) and
all mutation primitives are pure functions that return a new model, so models
can be shared freely across threads. Structural invariants are enforced in
``__post_init__``: unique class names, unique member names/signatures within
a class, relationship endpoints that exist, and an acyclic generalization
graph. Identical duplicate associations are deliberately *not* rejected here
(parsed input may carry them verbatim; lint reports them).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Optional, Union

from .errors import CycleError, InvariantViolation, SignatureConflict, UnknownClass

IDENTIFIER_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
MULTIPLICITY_RE = re.compile(r"(\d+|\d+\.\.\d+|\d+\.\.\*|\*)\Z")

PRIMITIVE_TYPES = frozenset(
    {"string", "boolean", "integer", "decimal", "dateTime", "duration", "void"}
)


def _check_identifier(value: str, what: str) -> None:
    if not IDENTIFIER_RE.match(value or ""):
        raise InvariantViolation(f"{what} is not a valid identifier: {value!r}")


class Visibility(Enum):
    """UML member visibility. Members written without a marker are public."""

    PUBLIC = "+"
    PRIVATE = "-"
    PROTECTED = "#"
    PACKAGE = "~"

    @classmethod
    def from_marker(cls, marker: str) -> "Visibility":
        for vis in cls:
            if vis.value == marker:
                return vis
        raise InvariantViolation(f"unknown visibility marker: {marker!r}")


@dataclass(frozen=True, slots=True)
class Parameter:
    name: str
    type_name: str

    def __post_init__(self) -> None:
        _check_identifier(self.name, "parameter name")
        _check_identifier(self.type_name, "parameter type")


@dataclass(frozen=True, slots=True)
class Attribute:
    name: str
    type_name: str
    visibility: Visibility = Visibility.PUBLIC

    def __post_init__(self) -> None:
        _check_identifier(self.name, "attribute name")
        _check_identifier(self.type_name, "attribute type")


@dataclass(frozen=True, slots=True)
class Method:
    """A class operation. Identity is the signature: (name, parameter types)."""

    name: str
    params: tuple[Parameter, ...] = ()
    return_type: str = "void"
    visibility: Visibility = Visibility.PUBLIC
    provenance: Optional[str] = None  # use-case ID that motivated the method

    def __post_init__(self) -> None:
        object.__setattr__(self, "params", tuple(self.params))
        _check_identifier(self.name, "method name")
        _check_identifier(self.return_type, "return type")
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise InvariantViolation(
                f"duplicate parameter name in method {self.name!r}"
            )

    @property
    def signature(self) -> tuple[str, tuple[str, ...]]:
        return (self.name, tuple(p.type_name for p in self.params))

    def render_signature(self) -> str:
        args = ", ".join(f"{p.name}: {p.type_name}" for p in self.params)
        return f"{self.name}({args}): {self.return_type}"


@dataclass(frozen=True, slots=True)
class ClassDef:
    name: str
    attributes: tuple[Attribute, ...] = ()
    methods: tuple[Method, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "attributes", tuple(self.attributes))
        object.__setattr__(self, "methods", tuple(self.methods))
        _check_identifier(self.name, "class name")
        attr_names = [a.name for a in self.attributes]
        if len(set(attr_names)) != len(attr_names):
            raise InvariantViolation(f"duplicate attribute name in class {self.name!r}")
        sigs = [m.signature for m in self.methods]
        if len(set(sigs)) != len(sigs):
            raise InvariantViolation(f"duplicate method signature in class {self.name!r}")

    def find_method(self, signature: tuple[str, tuple[str, ...]]) -> Optional[Method]:
        for m in self.methods:
            if m.signature == signature:
                return m
        return None


@dataclass(frozen=True, slots=True)
class Generalization:
    """``child --|> parent`` inheritance edge."""

    child: str
    parent: str

    def __post_init__(self) -> None:
        _check_identifier(self.child, "generalization child")
        _check_identifier(self.parent, "generalization parent")

    def endpoints(self) -> tuple[str, str]:
        return (self.child, self.parent)

    def key(self) -> tuple:
        return ("generalization", self.child, self.parent)


@dataclass(frozen=True, slots=True)
class Association:
    """``source "m" -- "n" target : label`` link; the label is part of identity."""

    source: str
    source_mult: str
    target: str
    target_mult: str
    label: Optional[str] = None

    def __post_init__(self) -> None:
        _check_identifier(self.source, "association source")
        _check_identifier(self.target, "association target")
        for mult in (self.source_mult, self.target_mult):
            if not MULTIPLICITY_RE.match(mult or ""):
                raise InvariantViolation(f"bad multiplicity: {mult!r}")
        if self.label is not None and not self.label.strip():
            raise InvariantViolation("association label must be nonempty when present")

    def endpoints(self) -> tuple[str, str]:
        return (self.source, self.target)

    def key(self) -> tuple:
        # None label maps to "" (an empty label is impossible), keeping the
        # key all-strings so relationship keys sort against each other.
        return (
            "association",
            self.source,
            self.source_mult,
            self.target,
            self.target_mult,
            self.label or "",
        )


Relationship = Union[Generalization, Association]


def generalization_cycle(edges: Iterable[tuple[str, str]]) -> Optional[list[str]]:
    """Return one cycle (as a node list) in the child->parent graph, if any."""
    graph: dict[str, list[str]] = {}
    for child, parent in edges:
        graph.setdefault(child, []).append(parent)
    WHITE, GREY, BLACK = 0, 1, 2
    color = {node: WHITE for node in graph}
    stack: list[str] = []

    def visit(node: str) -> Optional[list[str]]:
        color[node] = GREY
        stack.append(node)
        for nxt in graph.get(node, ()):
            if color.get(nxt, WHITE) == GREY:
                return stack[stack.index(nxt):] + [nxt]
            if color.get(nxt, WHITE) == WHITE and nxt in color:
                found = visit(nxt)
                if found:
                    return found
        stack.pop()
        color[node] = BLACK
        return None

    for start in graph:
        if color[start] == WHITE:
            found = visit(start)
            if found:
                return found
    return None


@dataclass(frozen=True, slots=True)
class ClassModel:
    classes: tuple[ClassDef, ...] = ()
    relationships: tuple[Relationship, ...] = ()
    macro_aliases: tuple[tuple[str, str], ...] = ()  # (alias, keyword) pairs

    def __post_init__(self) -> None:
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "relationships", tuple(self.relationships))
        object.__setattr__(self, "macro_aliases", tuple(self.macro_aliases))
        names = [c.name for c in self.classes]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise InvariantViolation(f"duplicate class name(s): {', '.join(dupes)}")
        known = set(names)
        for rel in self.relationships:
            for end in rel.endpoints():
                if end not in known:
                    raise InvariantViolation(
                        f"relationship endpoint {end!r} is not a declared class"
                    )
        cycle = generalization_cycle(
            (r.child, r.parent)
            for r in self.relationships
            if isinstance(r, Generalization)
        )
        if cycle:
            raise InvariantViolation(
                "generalization cycle: " + " -> ".join(cycle)
            )

    @property
    def class_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.classes)

    def generalizations(self) -> tuple[Generalization, ...]:
        return tuple(r for r in self.relationships if isinstance(r, Generalization))

    def associations(self) -> tuple[Association, ...]:
        return tuple(r for r in self.relationships if isinstance(r, Association))


EMPTY_MODEL = ClassModel()


# --- operations --------------------------------------------------------------

def find_class(model: ClassModel, name: str) -> Optional[ClassDef]:
    """Return the class named ``name``, or None. Class names are unique."""
    for cls in model.classes:
        if cls.name == name:
            return cls
    return None


def add_class(model: ClassModel, class_def: ClassDef) -> ClassModel:
    """Append a class; no-op when an identical-or-richer class already exists.

    A pre-existing class with the same name is accepted when it already
    contains every attribute of ``class_def`` (so re-applying a suggestion is
    a no-op); any other clash is a conflict.
    """
    existing = find_class(model, class_def.name)
    if existing is None:
        return replace(model, classes=model.classes + (class_def,))
    have = {(a.name, a.type_name, a.visibility) for a in existing.attributes}
    want = {(a.name, a.type_name, a.visibility) for a in class_def.attributes}
    if want <= have and not class_def.methods:
        return model
    raise SignatureConflict(
        f"class {class_def.name!r} already exists with a different definition"
    )


def add_method(model: ClassModel, class_name: str, method: Method) -> ClassModel:
    """Append ``method`` to the named class, preserving everything else.

    Re-adding a method whose signature and return type already exist is a
    no-op; the same signature with a different return type is a conflict.
    """
    target = find_class(model, class_name)
    if target is None:
        raise UnknownClass(f"no class named {class_name!r}")
    existing = target.find_method(method.signature)
    if existing is not None:
        if existing.return_type != method.return_type:
            raise SignatureConflict(
                f"{class_name}.{method.render_signature()} conflicts with "
                f"existing return type {existing.return_type!r}"
            )
        return model
    updated = replace(target, methods=target.methods + (method,))
    return replace(
        model,
        classes=tuple(updated if c.name == class_name else c for c in model.classes),
    )


def add_relationship(model: ClassModel, rel: Relationship) -> ClassModel:
    """Append ``rel`` unless an identical relationship already exists."""
    for end in rel.endpoints():
        if find_class(model, end) is None:
            raise UnknownClass(f"no class named {end!r}")
    if any(existing.key() == rel.key() for existing in model.relationships):
        return model
    if isinstance(rel, Generalization):
        edges = [(r.child, r.parent) for r in model.generalizations()]
        edges.append((rel.child, rel.parent))
        cycle = generalization_cycle(edges)
        if cycle:
            raise CycleError(
                "generalization would create a cycle: " + " -> ".join(cycle)
            )
    return replace(model, relationships=model.relationships + (rel,))


# --- canonical equality -------------------------------------------------------

def _canonical_attribute(attr: Attribute) -> tuple:
    return (attr.visibility.value, attr.name, attr.type_name)


def _canonical_method(method: Method) -> tuple:
    return (
        method.visibility.value,
        method.name,
        tuple((p.name, p.type_name) for p in method.params),
        method.return_type,
    )


def canonical_form(model: ClassModel) -> tuple:
    """A hashable snapshot insensitive to declaration order and duplicates.

    Classes are keyed by name, members compared as sets, relationships as a
    multiset (verbatim duplicate associations count), aliases as a set.
    """
    classes = tuple(
        sorted(
            (
                cls.name,
                tuple(sorted(_canonical_attribute(a) for a in cls.attributes)),
                tuple(sorted(_canonical_method(m) for m in cls.methods)),
            )
            for cls in model.classes
        )
    )
    rel_counts: dict[tuple, int] = {}
    for rel in model.relationships:
        key = rel.key()
        rel_counts[key] = rel_counts.get(key, 0) + 1
    relationships = tuple(
        sorted((k, n) for k, n in rel_counts.items())
    )
    aliases = tuple(sorted(set(model.macro_aliases)))
    return (classes, relationships, aliases)


def canonical_equal(a: ClassModel, b: ClassModel) -> bool:
    """Equality up to ordering, member duplication, and visibility defaults."""
    return canonical_form(a) == canonical_form(b)


# --- type registry -------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class TypeRegistry:
    """The three disjoint pools a parameter/return type may resolve against."""

    primitives: frozenset[str] = PRIMITIVE_TYPES
    class_names: frozenset[str] = frozenset()
    auxiliary: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if self.primitives & self.class_names or (
            (self.primitives | self.class_names) & self.auxiliary
        ):
            raise InvariantViolation("type registry partitions must be disjoint")

    def resolvable(self, type_name: str) -> bool:
        return (
            type_name in self.primitives
            or type_name in self.class_names
            or type_name in self.auxiliary
        )


def type_registry(
    model: ClassModel, extra_auxiliary: Iterable[str] = ()
) -> TypeRegistry:
    """Build the registry for ``model``.

    Class names come from the model only; names referenced by parameters are
    never auto-added. Auxiliary entries shadowed by a class or primitive are
    dropped (class names win, per the resolution order).
    """
    class_names = frozenset(model.class_names)
    auxiliary = frozenset(extra_auxiliary) - class_names - PRIMITIVE_TYPES
    return TypeRegistry(
        primitives=PRIMITIVE_TYPES, class_names=class_names, auxiliary=auxiliary
    )


def referenced_types(model: ClassModel) -> dict[str, list[str]]:
    """Map each parameter/return type name to 'Class.method' usage sites."""
    usage: dict[str, list[str]] = {}
    for cls in model.classes:
        for method in cls.methods:
            site = f"{cls.name}.{method.name}"
            for p in method.params:
                usage.setdefault(p.type_name, []).append(site)
            usage.setdefault(method.return_type, []).append(site)
    return usage
