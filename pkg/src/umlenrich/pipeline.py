"""The enrichment loop: per use case, suggest -> review -> merge -> validate.

Use cases are processed in ascending canonical ID order (the source gives no
order; a fixed one makes replays deterministic). The session is persisted
after every iteration, so killing the process mid-run loses at most the
iteration in flight; rerunning resumes with the remaining use cases and
reaches the same final snapshot as an uninterrupted run.
"""

from __future__ import annotations

from typing import Callable, Optional, Protocol

from .errors import NonInteractiveEnvironment, UmlEnrichError
from .model import ClassModel, Method, type_registry
from .plantuml import parse, parse_member, parse_relationship, render
from .reports import lint, metrics
from .session import (
    DECISION_ACCEPTED,
    DECISION_EDITED,
    DECISION_REJECTED,
    Decision,
    IterationRecord,
    Session,
    SuggestionSet,
)
from .suggest import (
    ADD_METHOD,
    ADD_RELATIONSHIP,
    Suggestion,
    apply_suggestions,
)
from .usecases import Corpus, UseCase

MODE_INTERACTIVE = "interactive"
MODE_ACCEPT_ALL = "accept_all"
MODE_REJECT_ALL = "reject_all"


class SuggestionBackend(Protocol):
    name: str

    def suggest(self, model: ClassModel, uc: UseCase) -> SuggestionSet: ...


def review_prompt(
    suggestion: Suggestion,
    input_fn: Callable[[str], str],
    output_fn: Callable[[str], None],
) -> Decision:
    """Render one suggestion and read an accept/reject/edit decision.

    Editing re-validates the payload and re-prompts until it parses; a blank
    edit line abandons the edit and returns to the a/r/e choice.
    """
    while True:
        output_fn(f"[{suggestion.source_uc}] {suggestion.describe()}")
        if suggestion.rationale:
            output_fn(f"  rationale: {suggestion.rationale}")
        answer = input_fn("accept / reject / edit [a/r/e]: ").strip().lower()
        if answer == "a":
            return Decision(kind=DECISION_ACCEPTED)
        if answer == "r":
            return Decision(kind=DECISION_REJECTED)
        if answer == "e":
            edited = _edit_suggestion(suggestion, input_fn, output_fn)
            if edited is not None:
                return Decision(kind=DECISION_EDITED, edited=edited)
            continue
        output_fn("please answer a, r, or e")


def _edit_suggestion(
    suggestion: Suggestion,
    input_fn: Callable[[str], str],
    output_fn: Callable[[str], None],
) -> Optional[Suggestion]:
    from dataclasses import replace as dc_replace

    while True:
        if suggestion.kind == ADD_METHOD:
            line = input_fn("new signature (blank cancels): ").strip()
        elif suggestion.kind == ADD_RELATIONSHIP:
            line = input_fn("new relationship line (blank cancels): ").strip()
        else:
            line = input_fn("new class name (blank cancels): ").strip()
        if not line:
            return None
        try:
            if suggestion.kind == ADD_METHOD:
                member = parse_member(line)
                if not isinstance(member, Method):
                    raise UmlEnrichError("that line is an attribute, not a method")
                return dc_replace(suggestion, method=member)
            if suggestion.kind == ADD_RELATIONSHIP:
                return dc_replace(suggestion, relationship=parse_relationship(line))
            return dc_replace(
                suggestion, class_def=dc_replace(suggestion.class_def, name=line)
            )
        except UmlEnrichError as exc:
            output_fn(f"invalid edit: {exc}")


def _decide(
    suggestion: Suggestion,
    mode: str,
    input_fn: Optional[Callable[[str], str]],
    output_fn: Callable[[str], None],
) -> Decision:
    if mode == MODE_ACCEPT_ALL:
        return Decision(kind=DECISION_ACCEPTED)
    if mode == MODE_REJECT_ALL:
        return Decision(kind=DECISION_REJECTED)
    return review_prompt(suggestion, input_fn, output_fn)


def run_enrich(
    session: Session,
    corpus: Corpus,
    backend: SuggestionBackend,
    mode: str,
    base_model: ClassModel,
    *,
    save: Callable[[Session], None] = lambda session: None,
    input_fn: Optional[Callable[[str], str]] = None,
    output_fn: Callable[[str], None] = lambda line: None,
    aux_types: tuple[str, ...] = (),
) -> Session:
    """Run every pending use case through suggest/review/merge/validate.

    A backend or merge failure is recorded on the session (``last_error``),
    completed iterations stay intact, and the error propagates; rerunning
    resumes at the failed use case.
    """
    if mode not in (MODE_INTERACTIVE, MODE_ACCEPT_ALL, MODE_REJECT_ALL):
        raise UmlEnrichError(f"unknown mode: {mode!r}")
    if mode == MODE_INTERACTIVE and input_fn is None:
        raise NonInteractiveEnvironment(
            "interactive review requested but no input stream is attached"
        )

    if session.current_model_snapshot:
        model = parse(session.current_model_snapshot)
    else:
        model = base_model
        session.current_model_snapshot = render(model)

    done = session.done_ids()
    pending = [case for case in corpus.cases if case.id not in done]
    for case in pending:
        try:
            suggestion_set = backend.suggest(model, case)
            decisions = tuple(
                _decide(s, mode, input_fn, output_fn) for s in suggestion_set
            )
            for suggestion, decision in zip(suggestion_set, decisions):
                if decision.applied:
                    effective = decision.edited if decision.kind == DECISION_EDITED else suggestion
                    model = apply_suggestions(
                        model,
                        SuggestionSet(suggestions=(effective,), backend_name=backend.name),
                    )
        except UmlEnrichError as exc:
            session.last_error = {
                "use_case_id": case.id,
                "error": f"{type(exc).__name__}: {exc}",
            }
            save(session)
            raise

        notes = [
            f"{finding.category}: {finding.subject}"
            for finding in lint(model, type_registry(model, aux_types)).findings
        ]
        record = IterationRecord(
            use_case_id=case.id,
            suggestions=suggestion_set,
            decisions=decisions,
            validation_summary={"metrics": metrics(model).to_dict(), "notes": notes},
        )
        session.iterations.append(record)
        session.current_model_snapshot = render(model)
        session.last_error = None
        save(session)
        output_fn(
            f"{case.id}: {sum(1 for d in decisions if d.applied)}/{len(decisions)} "
            "suggestions applied"
        )
    return session
