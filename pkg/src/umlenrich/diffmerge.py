"""Structural diff between class models.

Element identities: classes by name, methods by (class, name, ordered
parameter types), attributes by (class, name), relationships by their full
key including multiplicities and label. A brand-new class contributes an
attribute-only *shell* to ``added_classes`` while its methods are listed
individually under ``added_methods`` — so the summary counts every element
exactly once and the delta converts 1:1 into additive suggestions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .model import (
    Attribute,
    ClassDef,
    ClassModel,
    Method,
    Relationship,
    canonical_form,
)


def class_shell(cls: ClassDef) -> ClassDef:
    """The class minus its methods (they travel as separate additions)."""
    return ClassDef(name=cls.name, attributes=cls.attributes, methods=())


@dataclass(frozen=True, slots=True)
class ModelDelta:
    added_classes: tuple[ClassDef, ...] = ()
    added_methods: tuple[tuple[str, Method], ...] = ()
    added_attributes: tuple[tuple[str, Attribute], ...] = ()
    added_relationships: tuple[Relationship, ...] = ()
    removed_classes: tuple[ClassDef, ...] = ()
    removed_methods: tuple[tuple[str, Method], ...] = ()
    removed_attributes: tuple[tuple[str, Attribute], ...] = ()
    removed_relationships: tuple[Relationship, ...] = ()

    def is_empty(self) -> bool:
        return not any(
            (
                self.added_classes,
                self.added_methods,
                self.added_attributes,
                self.added_relationships,
                self.removed_classes,
                self.removed_methods,
                self.removed_attributes,
                self.removed_relationships,
            )
        )

    def has_removals(self) -> bool:
        return bool(
            self.removed_classes
            or self.removed_methods
            or self.removed_attributes
            or self.removed_relationships
        )


def _method_additions(
    base: Optional[ClassDef], cls: ClassDef
) -> list[tuple[str, Method]]:
    base_sigs = {m.signature for m in base.methods} if base else set()
    return [(cls.name, m) for m in cls.methods if m.signature not in base_sigs]


def diff(old: ClassModel, new: ClassModel) -> ModelDelta:
    """Delta from ``old`` to ``new``. Macro aliases are presentation, not diffed."""
    old_by_name = {c.name: c for c in old.classes}
    new_by_name = {c.name: c for c in new.classes}

    added_classes = tuple(
        class_shell(c) for c in new.classes if c.name not in old_by_name
    )
    removed_classes = tuple(
        class_shell(c) for c in old.classes if c.name not in new_by_name
    )

    added_methods: list[tuple[str, Method]] = []
    removed_methods: list[tuple[str, Method]] = []
    added_attributes: list[tuple[str, Attribute]] = []
    removed_attributes: list[tuple[str, Attribute]] = []
    for cls in new.classes:
        added_methods.extend(_method_additions(old_by_name.get(cls.name), cls))
    for cls in old.classes:
        removed_methods.extend(_method_additions(new_by_name.get(cls.name), cls))
    for cls in new.classes:
        base = old_by_name.get(cls.name)
        if base is None:
            continue  # attributes of a brand-new class ride its shell
        base_names = {a.name for a in base.attributes}
        added_attributes.extend(
            (cls.name, a) for a in cls.attributes if a.name not in base_names
        )
    for cls in old.classes:
        base = new_by_name.get(cls.name)
        if base is None:
            continue
        base_names = {a.name for a in base.attributes}
        removed_attributes.extend(
            (cls.name, a) for a in cls.attributes if a.name not in base_names
        )

    old_rel_keys = {r.key() for r in old.relationships}
    new_rel_keys = {r.key() for r in new.relationships}
    seen: set[tuple] = set()
    added_relationships = []
    for rel in new.relationships:
        if rel.key() not in old_rel_keys and rel.key() not in seen:
            seen.add(rel.key())
            added_relationships.append(rel)
    seen.clear()
    removed_relationships = []
    for rel in old.relationships:
        if rel.key() not in new_rel_keys and rel.key() not in seen:
            seen.add(rel.key())
            removed_relationships.append(rel)

    return ModelDelta(
        added_classes=added_classes,
        added_methods=tuple(added_methods),
        added_attributes=tuple(added_attributes),
        added_relationships=tuple(added_relationships),
        removed_classes=removed_classes,
        removed_methods=tuple(removed_methods),
        removed_attributes=tuple(removed_attributes),
        removed_relationships=tuple(removed_relationships),
    )


def missing_elements(base: ClassModel, other: ClassModel) -> list[str]:
    """Elements of ``base`` absent from ``other``, by full element equality.

    Stricter than identity-based diffing: an altered return type, parameter
    name, or visibility counts as the original element going missing. Used to
    detect replies that failed to preserve the input diagram.
    """
    missing: list[str] = []
    base_classes, base_rels, _ = canonical_form(base)
    other_classes, other_rels, _ = canonical_form(other)
    other_by_name = {name: (attrs, methods) for name, attrs, methods in other_classes}
    for name, attrs, methods in base_classes:
        if name not in other_by_name:
            missing.append(f"class {name}")
            continue
        have_attrs, have_methods = other_by_name[name]
        for attr in attrs:
            if attr not in set(have_attrs):
                missing.append(f"attribute {name}.{attr[1]}")
        have_method_set = set(have_methods)
        for method in methods:
            if method not in have_method_set:
                missing.append(f"method {name}.{method[1]}")
    other_rel_counts = dict(other_rels)
    for key, count in base_rels:
        if other_rel_counts.get(key, 0) < count:
            missing.append(f"relationship {' '.join(str(p) for p in key[1:3])}...")
    return missing


@dataclass(frozen=True, slots=True)
class DeltaSummary:
    """Per-category element counts of a delta (the CLI ``diff`` report)."""

    added: dict = field(default_factory=dict)
    removed: dict = field(default_factory=dict)
    dynamic_behaviors_captured: Optional[bool] = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "added": self.added,
                "removed": self.removed,
                "dynamic_behaviors_captured": self.dynamic_behaviors_captured,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "DeltaSummary":
        data = json.loads(text)
        return cls(
            added=data["added"],
            removed=data["removed"],
            dynamic_behaviors_captured=data["dynamic_behaviors_captured"],
        )


def summarize(delta: ModelDelta, new_model: Optional[ClassModel] = None) -> DeltaSummary:
    """Counts per category; with ``new_model``, also whether it has behavior."""
    captured: Optional[bool] = None
    if new_model is not None:
        captured = any(cls.methods for cls in new_model.classes)
    return DeltaSummary(
        added={
            "classes": len(delta.added_classes),
            "methods": len(delta.added_methods),
            "attributes": len(delta.added_attributes),
            "relationships": len(delta.added_relationships),
        },
        removed={
            "classes": len(delta.removed_classes),
            "methods": len(delta.removed_methods),
            "attributes": len(delta.removed_attributes),
            "relationships": len(delta.removed_relationships),
        },
        dynamic_behaviors_captured=captured,
    )
