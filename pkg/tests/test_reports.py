from __future__ import annotations

import pytest
from hypothesis import given, settings

from model_strategies import class_models
from umlenrich.diffmerge import ModelDelta, diff
from umlenrich.errors import UnknownUseCase
from umlenrich.model import ClassDef, ClassModel, type_registry
from umlenrich.plantuml import parse, parse_member, parse_relationship
from umlenrich.reports import (
    GapReport,
    LintReport,
    Metrics,
    TraceabilityMatrix,
    gaps,
    lint,
    load_relationship_map,
    metrics,
    relationship_validation,
    traceability,
)
from umlenrich.session import Decision, IterationRecord, Session
from umlenrich.suggest import ADD_METHOD, Suggestion, SuggestionSet

SECTION_4_5_CLASSES = {
    "Product",
    "CollectionPoint",
    "RecyclingPoint",
    "EnvironmentalImpact",
    "InformationResource",
    "RewardSystem",
    "PaymentDetails",
    "ShippingDetails",
    "TransportCompany",
    "StateAdministration",
}
SUBCLASSES = {"IndividualUser", "CorporateUser", "Plastic", "Paper", "Metal", "Glass"}


def test_metrics_initial(initial_model):
    assert metrics(initial_model) == Metrics(21, 0, 19, False)


def test_metrics_enhanced(enhanced_model):
    assert metrics(enhanced_model) == Metrics(22, 22, 21, True)


def test_metrics_empty():
    assert metrics(ClassModel()) == Metrics(0, 0, 0, False)


@settings(max_examples=100, deadline=None)
@given(model=class_models())
def test_metrics_match_brute_force(model):
    got = metrics(model)
    assert got.class_count == len(list(model.classes))
    assert got.method_count == sum(len(c.methods) for c in model.classes)
    assert got.relationship_count == len(list(model.relationships))
    assert got.dynamic_behaviors_captured == (got.method_count > 0)


def test_metrics_round_trip(enhanced_model):
    m = metrics(enhanced_model)
    assert Metrics.from_dict(m.to_dict()) == m


# --- traceability -----------------------------------------------------------------

def test_traceability_golden(golden_model, corpus, golden_session):
    matrix = traceability(golden_model, corpus, golden_session)
    assert len(matrix.rows) == 18
    assert all(r.decision == "accepted" for r in matrix.rows)
    uc12 = [r for r in matrix.rows if r.use_case_id == "UC12"]
    assert len(uc12) == 1
    assert uc12[0].class_name == "User"
    assert uc12[0].signature == "trackWasteJourney(trackingCode: string): string"


def test_traceability_rows_use_canonical_ids(golden_model, corpus, golden_session):
    matrix = traceability(golden_model, corpus, golden_session)
    ids = {r.use_case_id for r in matrix.rows}
    assert "UC22" not in ids and "UC23" not in ids
    assert "UC20" in ids and "UC21" in ids


def test_traceability_empty_session(golden_model, corpus):
    session = Session(base_diagram_path="x", corpus_path="y", backend_spec={})
    assert traceability(golden_model, corpus, session).rows == ()


def test_traceability_row_count_recount_oracle(golden_model, corpus, golden_session):
    # independent recount: distinct (canonical uc, signature, decision)
    # triples over the session's add_method decisions
    expected = set()
    for record in golden_session.iterations:
        canonical = corpus.resolve(record.use_case_id)
        for suggestion, decision in zip(record.suggestions, record.decisions):
            if suggestion.kind == ADD_METHOD:
                expected.add(
                    (canonical, suggestion.method.render_signature(), decision.kind)
                )
    matrix = traceability(golden_model, corpus, golden_session)
    assert len(matrix.rows) == len(expected)


def test_traceability_unknown_use_case(golden_model, corpus):
    suggestion = Suggestion(
        kind=ADD_METHOD,
        source_uc="UC77",
        class_name="User",
        method=parse_member("+x(): void"),
    )
    record = IterationRecord(
        use_case_id="UC77",
        suggestions=SuggestionSet(suggestions=(suggestion,), backend_name="t"),
        decisions=(Decision(kind="rejected"),),
        validation_summary={},
    )
    session = Session(base_diagram_path="x", corpus_path="y", backend_spec={})
    session.iterations.append(record)
    with pytest.raises(UnknownUseCase):
        traceability(golden_model, corpus, session)


def test_traceability_rejected_and_edited_rows(initial_model, corpus):
    rejected = Suggestion(
        kind=ADD_METHOD,
        source_uc="UC1",
        class_name="User",
        method=parse_member("+bogus(): void"),
    )
    original = Suggestion(
        kind=ADD_METHOD,
        source_uc="UC1",
        class_name="User",
        method=parse_member("+register(): void"),
    )
    edited = Suggestion(
        kind=ADD_METHOD,
        source_uc="UC1",
        class_name="User",
        method=parse_member("+registerUser(): boolean"),
    )
    record = IterationRecord(
        use_case_id="UC1",
        suggestions=SuggestionSet(suggestions=(rejected, original), backend_name="t"),
        decisions=(Decision(kind="rejected"), Decision(kind="edited", edited=edited)),
        validation_summary={},
    )
    session = Session(base_diagram_path="x", corpus_path="y", backend_spec={})
    session.iterations.append(record)
    from umlenrich.suggest import apply_suggestions

    model = apply_suggestions(
        initial_model, SuggestionSet(suggestions=(edited,), backend_name="t")
    )
    matrix = traceability(model, corpus, session)
    decisions = {r.signature: r.decision for r in matrix.rows}
    assert decisions == {
        "bogus(): void": "rejected",
        "registerUser(): boolean": "edited",
    }


def test_traceability_json_round_trip(golden_model, corpus, golden_session):
    matrix = traceability(golden_model, corpus, golden_session)
    assert TraceabilityMatrix.from_json(matrix.to_json()) == matrix
    assert "Use case" in matrix.render_text()


# --- relationship validation ---------------------------------------------------------

def test_relationship_validation_paper_map(initial_model, enhanced_model, data_dir):
    mapping = load_relationship_map(data_dir / "relationship_map.json")
    report = relationship_validation(diff(initial_model, enhanced_model), mapping)
    by_rel = {row.relationship: row for row in report.rows}
    gateway_row = by_rel['PaymentGateway "1" -- "0..*" Transaction : processTransaction']
    assert gateway_row.use_case_ids == ("UC3", "UC4", "UC17")
    recycling_row = by_rel['User "1" -- "0..*" RecyclingPoint : hasRecyclingPoint']
    assert recycling_row.use_case_ids == ("UC7", "UC9")
    assert report.flagged == 0


def test_relationship_validation_empty_delta():
    assert relationship_validation(ModelDelta(), ()).rows == ()


def test_relationship_validation_flag_count(initial_model, enhanced_model, data_dir):
    delta = diff(initial_model, enhanced_model)
    full = load_relationship_map(data_dir / "relationship_map.json")
    partial = full[:1]
    for mapping in ((), partial, full):
        report = relationship_validation(delta, mapping)
        mapped = sum(1 for row in report.rows if row.mapped)
        assert report.flagged == len(delta.added_relationships) - mapped


def test_relationship_validation_json_round_trip(initial_model, enhanced_model, data_dir):
    mapping = load_relationship_map(data_dir / "relationship_map.json")
    report = relationship_validation(diff(initial_model, enhanced_model), mapping)
    from umlenrich.reports import RelationshipValidationReport

    assert RelationshipValidationReport.from_json(report.to_json()) == report


# --- gaps --------------------------------------------------------------------------

def test_gaps_golden(golden_model, corpus, golden_session, aux_types):
    registry = type_registry(golden_model, aux_types)
    report = gaps(golden_model, corpus, golden_session, registry)
    assert set(report.methodless_classes) == SECTION_4_5_CLASSES | SUBCLASSES
    assert len(report.methodless_classes) == 16
    assert [uc for uc, _ in report.uncovered_use_cases] == ["UC6", "UC9", "UC10"]
    assert report.unresolved_parameter_types == ()


def test_gaps_methodless_partition(golden_model, corpus, golden_session, aux_types):
    report = gaps(golden_model, corpus, golden_session, type_registry(golden_model, aux_types))
    with_methods = {c.name for c in golden_model.classes if c.methods}
    assert set(report.methodless_classes) | with_methods == set(golden_model.class_names)
    assert set(report.methodless_classes) & with_methods == set()


def test_gaps_no_methodless_when_all_have_methods(corpus):
    model = parse(
        "@startuml\nclass A {\n+go(): void\n}\nclass B {\n+run(): void\n}\n@enduml"
    )
    session = Session(base_diagram_path="x", corpus_path="y", backend_spec={})
    report = gaps(model, corpus, session, type_registry(model))
    assert report.methodless_classes == ()


def test_gaps_unresolved_without_auxiliaries(golden_model, corpus, golden_session):
    report = gaps(golden_model, corpus, golden_session, type_registry(golden_model))
    assert "ProductDetails" in report.unresolved_parameter_types
    assert "ShippingDetails" not in report.unresolved_parameter_types


def test_gaps_json_round_trip(golden_model, corpus, golden_session, aux_types):
    report = gaps(golden_model, corpus, golden_session, type_registry(golden_model, aux_types))
    assert GapReport.from_json(report.to_json()) == report


# --- lint ---------------------------------------------------------------------------

def test_lint_clean_on_enhanced_with_auxiliaries(enhanced_model, aux_types):
    report = lint(enhanced_model, type_registry(enhanced_model, aux_types))
    assert report.findings == ()
    assert not report


def test_lint_unresolved_without_auxiliaries(enhanced_model):
    report = lint(enhanced_model, type_registry(enhanced_model))
    unresolved = {f.subject for f in report.findings if f.category == "unresolved-type"}
    assert "ProductDetails" in unresolved
    assert {f.category for f in report.findings} == {"unresolved-type"}


def test_lint_class_naming():
    model = ClassModel(classes=(ClassDef("bad_name"),))
    report = lint(model)
    assert [f.category for f in report.findings] == ["class-name"]
    assert report.findings[0].subject == "bad_name"


def test_lint_method_naming():
    model = parse("@startuml\nclass A {\n+Bad_Name(): void\n}\n@enduml")
    report = lint(model)
    assert [f.category for f in report.findings] == ["method-name"]


def test_lint_duplicate_association():
    text = (
        "@startuml\nclass A {\n}\nclass B {\n}\n"
        'A "1" -- "0..*" B : same\nA "1" -- "0..*" B : same\n@enduml'
    )
    report = lint(parse(text))
    assert [f.category for f in report.findings] == ["duplicate-association"]


def test_lint_different_labels_not_duplicates(enhanced_model, aux_types):
    # the enhanced fixture has two PaymentGateway-Transaction edges with
    # different labels; they must not be flagged
    report = lint(enhanced_model, type_registry(enhanced_model, aux_types))
    assert not [f for f in report.findings if f.category == "duplicate-association"]


def test_lint_json_round_trip(enhanced_model):
    report = lint(enhanced_model, type_registry(enhanced_model))
    assert LintReport.from_json(report.to_json()) == report
