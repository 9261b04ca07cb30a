from __future__ import annotations

import json

import pytest

from umlenrich.diffmerge import diff
from umlenrich.errors import DestructiveReply, InvariantViolation, MappingError
from umlenrich.model import Attribute, ClassDef, ClassModel, canonical_equal
from umlenrich.plantuml import render
from umlenrich.suggest import (
    ADD_CLASS,
    ADD_METHOD,
    ADD_RELATIONSHIP,
    Suggestion,
    SuggestionSet,
    apply_suggestions,
    build_prompt,
    extract_suggestions,
    load_mapping,
    prompt_messages,
    rules_suggest,
    suggestion_from_json,
    suggestion_to_json,
    suggestions_from_reply,
    suggestions_of,
)
from umlenrich.usecases import UseCase

VERBATIM_PHRASE = "Maintain consistency in property names"


def _uc(uc_id="UC1", title="User Registration"):
    return UseCase(
        id=uc_id,
        title=title,
        actor="Visitor",
        description="A visitor registers.",
        main_scenario=("Visitor registers.",),
    )


def test_build_prompt_contains_instructions_and_diagram(initial_model, corpus):
    prompt = build_prompt(initial_model, corpus.find("UC1"))
    assert VERBATIM_PHRASE in prompt
    assert render(initial_model) in prompt
    assert "| Actor | Visitor |" in prompt


def test_build_prompt_empty_model():
    prompt = build_prompt(ClassModel(), _uc())
    assert "@startuml\n@enduml" in prompt


def test_prompt_length_grows_with_model_size(initial_model, enhanced_model):
    nested = [
        ClassModel(),
        ClassModel(classes=initial_model.classes[:5], macro_aliases=initial_model.macro_aliases),
        initial_model,
        enhanced_model,
    ]
    lengths = [len(build_prompt(model, _uc())) for model in nested]
    assert lengths == sorted(lengths) and len(set(lengths)) == len(lengths)


def test_prompt_messages_split(initial_model):
    system, user = prompt_messages(initial_model, _uc())
    assert VERBATIM_PHRASE in system
    assert "@startuml" in user and VERBATIM_PHRASE not in user


# --- extract_suggestions -------------------------------------------------------

def test_extract_full_fixture_delta(initial_model, enhanced_model):
    result = extract_suggestions(initial_model, enhanced_model, source_uc="UC1")
    assert len(result) == 25
    kinds = [s.kind for s in result]
    assert kinds.count(ADD_CLASS) == 1
    assert kinds.count(ADD_METHOD) == 22
    assert kinds.count(ADD_RELATIONSHIP) == 2
    added_class = next(s for s in result if s.kind == ADD_CLASS)
    assert added_class.class_def.name == "PlatformManager"
    manager_methods = {
        s.method.name for s in result if s.kind == ADD_METHOD and s.class_name == "PlatformManager"
    }
    assert manager_methods == {
        "login",
        "viewAndAnalyzeWasteManagementData",
        "monitorRecyclingAndWasteManagementPerformance",
    }


def test_extract_identical_models_is_empty(enhanced_model):
    assert len(extract_suggestions(enhanced_model, enhanced_model)) == 0


def test_extract_reverse_is_destructive(initial_model, enhanced_model):
    with pytest.raises(DestructiveReply):
        extract_suggestions(enhanced_model, initial_model)


def test_extract_detects_altered_member(initial_model):
    # changing an attribute type counts as losing the original element
    classes = []
    for cls in initial_model.classes:
        if cls.name == "User":
            attrs = tuple(
                Attribute("UserID", "integer") if a.name == "UserID" else a
                for a in cls.attributes
            )
            cls = ClassDef(cls.name, attrs, cls.methods)
        classes.append(cls)
    altered = ClassModel(classes=tuple(classes), relationships=initial_model.relationships,
                         macro_aliases=initial_model.macro_aliases)
    with pytest.raises(DestructiveReply):
        extract_suggestions(initial_model, altered)


def test_apply_extracted_rebuilds_reply(initial_model, enhanced_model):
    result = extract_suggestions(initial_model, enhanced_model)
    rebuilt = apply_suggestions(initial_model, result)
    assert canonical_equal(rebuilt, enhanced_model)


def test_reply_parsing_is_pure(initial_model, enhanced_model):
    reply = f"Here you go:\n```plantuml\n{render(enhanced_model)}```\nDone."
    first = suggestions_from_reply(initial_model, reply, "UC3", "llm:m")
    second = suggestions_from_reply(initial_model, reply, "UC3", "llm:m")
    assert first == second
    assert first.raw_reply == reply


# --- suggestion set invariants ------------------------------------------------

def _method_suggestion(class_name="User"):
    from umlenrich.plantuml import parse_member

    return Suggestion(
        kind=ADD_METHOD,
        source_uc="UC1",
        class_name=class_name,
        method=parse_member("+go(): void"),
    )


def test_suggestion_set_rejects_duplicates():
    s = _method_suggestion()
    with pytest.raises(InvariantViolation):
        SuggestionSet(suggestions=(s, s), backend_name="x")


def test_suggestion_set_requires_add_class_first():
    method = _method_suggestion(class_name="Fresh")
    cls = Suggestion(kind=ADD_CLASS, source_uc="UC1", class_def=ClassDef("Fresh"))
    SuggestionSet(suggestions=(cls, method), backend_name="ok")
    with pytest.raises(InvariantViolation):
        SuggestionSet(suggestions=(method, cls), backend_name="bad")


def test_suggestion_payload_validation():
    with pytest.raises(InvariantViolation):
        Suggestion(kind=ADD_METHOD, class_name="User")
    with pytest.raises(InvariantViolation):
        Suggestion(kind="rename_class", class_name="User")


def test_suggestion_json_round_trip(initial_model, enhanced_model):
    for suggestion in extract_suggestions(initial_model, enhanced_model, source_uc="UC9"):
        data = json.loads(json.dumps(suggestion_to_json(suggestion)))
        assert suggestion_from_json(data) == suggestion


# --- rules backend ---------------------------------------------------------------

def test_rules_uc1(initial_model, rules_backend, corpus):
    result = rules_backend.suggest(initial_model, corpus.find("UC1"))
    assert len(result) == 1
    s = result.suggestions[0]
    assert s.kind == ADD_METHOD and s.class_name == "User"
    assert s.method.render_signature() == (
        "registerUser(name: string, email: string, phoneNumber: string, "
        "address: string): boolean"
    )
    assert s.source_uc == "UC1"


def test_rules_uc6_unmapped(initial_model, rules_backend, corpus):
    assert len(rules_backend.suggest(initial_model, corpus.find("UC6"))) == 0


def test_rules_unknown_id(initial_model, rules_backend):
    assert len(rules_backend.suggest(initial_model, _uc("UC99", "Mystery"))) == 0


def test_rules_alias_keys_resolve(initial_model, rules_backend, corpus, data_dir):
    # mapping keys UC22/UC23 by alias; lookups happen under canonical IDs
    raw = load_mapping(data_dir / "mapping.json")
    assert raw.lookup("UC22") and not raw.lookup("UC20")
    canonical = raw.canonicalized(corpus.id_aliases)
    assert canonical.lookup("UC20") and not canonical.lookup("UC22")
    uc20 = corpus.find("UC20")
    enriched = rules_backend.suggest(_with_manager(initial_model), uc20)
    assert [s.method.name for s in enriched] == [
        "monitorRecyclingAndWasteManagementPerformance"
    ]


def _with_manager(model):
    from umlenrich.model import add_class

    return add_class(model, ClassDef("PlatformManager"))


def test_rules_class_from_earlier_entry_is_fine(initial_model, rules_backend, corpus):
    # UC19 maps methods onto PlatformManager; UC15's entry introduces the
    # class, so suggesting works even against a model where the reviewer
    # rejected that add_class (the conflict surfaces at apply time instead)
    result = rules_backend.suggest(initial_model, corpus.find("UC19"))
    assert [s.method.name for s in result] == ["viewAndAnalyzeWasteManagementData"]


def test_rules_missing_class_is_mapping_error(initial_model, tmp_path):
    from umlenrich.suggest import RulesBackend

    mapping_file = tmp_path / "map.json"
    mapping_file.write_text(
        json.dumps(
            [
                {
                    "use_case": "UC5",
                    "suggestions": [
                        {"kind": "add_method", "class": "Ghost", "signature": "+go(): void"}
                    ],
                },
                {
                    "use_case": "UC7",
                    "suggestions": [{"kind": "add_class", "class": "Ghost"}],
                },
            ]
        )
    )
    backend = RulesBackend.from_file(mapping_file)
    # the only add_class for Ghost is mapped later than UC5: a mapping defect
    with pytest.raises(MappingError):
        backend.suggest(initial_model, _uc("UC5"))

    fixed = tmp_path / "fixed.json"
    fixed.write_text(
        json.dumps(
            [
                {
                    "use_case": "UC5",
                    "suggestions": [{"kind": "add_class", "class": "Ghost"}],
                },
                {
                    "use_case": "UC7",
                    "suggestions": [
                        {"kind": "add_method", "class": "Ghost", "signature": "+go(): void"}
                    ],
                },
            ]
        )
    )
    ok_backend = RulesBackend.from_file(fixed)
    # mapped first, so suggesting works even though the model lacks Ghost
    assert len(ok_backend.suggest(initial_model, _uc("UC7"))) == 1


def test_rules_add_class_then_method_in_same_entry(initial_model, rules_backend, corpus):
    result = rules_backend.suggest(initial_model, corpus.find("UC15"))
    assert [s.kind for s in result] == [ADD_CLASS, ADD_METHOD]
    merged = apply_suggestions(initial_model, result)
    manager = next(c for c in merged.classes if c.name == "PlatformManager")
    assert [a.name for a in manager.attributes] == ["ManagerID", "Name", "Role"]
    assert [m.name for m in manager.methods] == ["login"]


def test_load_mapping_rejects_garbage(tmp_path):
    bad = tmp_path / "map.json"
    bad.write_text('[{"use_case": "UC1", "suggestions": [{"kind": "add_method"}]}]')
    with pytest.raises(MappingError):
        load_mapping(bad)
    bad.write_text("{}")
    with pytest.raises(MappingError):
        load_mapping(bad)


def test_suggestions_of_orders_classes_first(initial_model, enhanced_model):
    ordered = suggestions_of(diff(initial_model, enhanced_model))
    kinds = [s.kind for s in ordered]
    assert kinds.index(ADD_CLASS) < kinds.index(ADD_METHOD)
    assert kinds.index(ADD_METHOD) < kinds.index(ADD_RELATIONSHIP)
