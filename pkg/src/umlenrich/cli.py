"""Command-line interface.

Exit codes: 0 success, 1 validation findings present, 2 usage error,
3 backend/IO failure. Secrets travel only through the environment variable
named by ``--api-key-env``; there is no flag that accepts a key value.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from . import diffmerge, pipeline, reports, session as session_mod
from .errors import UmlEnrichError
from .model import ClassModel, type_registry
from .plantuml import parse, render
from .suggest import LlmBackend, LlmConfig, RulesBackend, suggestion_to_json
from .usecases import Corpus, load_corpus


class _Usage(Exception):
    pass


def _read_diagram(path: str) -> ClassModel:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UmlEnrichError(f"cannot read diagram {path}: {exc}") from exc
    return parse(text)


def _aux_types(args) -> tuple[str, ...]:
    if not args.aux_types:
        return ()
    return tuple(name.strip() for name in args.aux_types.split(",") if name.strip())


def _backend_spec_from_args(args) -> dict:
    if args.backend == "rules":
        if not args.rules_file:
            raise _Usage("--backend rules requires --rules-file")
        return {"type": "rules", "rules_file": args.rules_file}
    if args.backend == "llm":
        if not args.base_url or not args.model_name:
            raise _Usage("--backend llm requires --base-url and --model-name")
        return {
            "type": "llm",
            "config": {
                "base_url": args.base_url,
                "model_name": args.model_name,
                "api_key_env_var": args.api_key_env,
                "timeout": args.timeout,
                "max_retries": args.max_retries,
                "temperature": args.temperature,
            },
        }
    raise _Usage("--backend must be 'llm' or 'rules'")


def _backend_from_spec(spec: dict, corpus: Corpus):
    if spec.get("type") == "rules":
        return RulesBackend.from_file(Path(spec["rules_file"]), corpus.id_aliases)
    if spec.get("type") == "llm":
        return LlmBackend(LlmConfig(**spec["config"]))
    raise UmlEnrichError(f"session names an unknown backend: {spec!r}")


# --- commands -----------------------------------------------------------------

def cmd_parse(args) -> int:
    model = _read_diagram(args.file)
    counts = reports.metrics(model)
    print(
        f"{args.file}: {counts.class_count} classes, {counts.method_count} methods, "
        f"{counts.relationship_count} relationships "
        f"({len(model.associations())} associations, "
        f"{len(model.generalizations())} generalizations)"
    )
    return 0


def cmd_print(args) -> int:
    sys.stdout.write(render(_read_diagram(args.file)))
    return 0


def cmd_diff(args) -> int:
    old = _read_diagram(args.old)
    new = _read_diagram(args.new)
    summary = diffmerge.summarize(diffmerge.diff(old, new), new_model=new)
    print(summary.to_json())
    return 0


def _require_corpus(args) -> Corpus:
    if not args.corpus:
        raise _Usage("--corpus is required for this command")
    return load_corpus(Path(args.corpus))


def cmd_suggest(args) -> int:
    if not args.diagram:
        raise _Usage("--diagram is required for suggest")
    model = _read_diagram(args.diagram)
    corpus = _require_corpus(args)
    case = corpus.find(args.uc)
    if case is None:
        raise UmlEnrichError(f"use case {args.uc!r} is not in the corpus")
    backend = _backend_from_spec(_backend_spec_from_args(args), corpus)
    suggestion_set = backend.suggest(model, case)
    print(json.dumps([suggestion_to_json(s) for s in suggestion_set], indent=2))
    return 0


def cmd_enrich(args) -> int:
    if not args.session:
        raise _Usage("--session is required for enrich")
    session_path = Path(args.session)
    if session_path.exists():
        sess = session_mod.load_session(session_path)
    else:
        if not args.diagram or not args.corpus:
            raise _Usage("a new session needs --diagram and --corpus")
        sess = session_mod.Session(
            base_diagram_path=args.diagram,
            corpus_path=args.corpus,
            backend_spec=_backend_spec_from_args(args),
        )
    corpus = load_corpus(Path(sess.corpus_path))
    base_model = _read_diagram(sess.base_diagram_path)
    if sess.iterations:
        session_mod.verify_integrity(sess, base_model)
    backend = _backend_from_spec(sess.backend_spec, corpus)
    mode = args.mode.replace("-", "_")
    input_fn = input if sys.stdin.isatty() else None

    pipeline.run_enrich(
        sess,
        corpus,
        backend,
        mode,
        base_model,
        save=lambda s: session_mod.save_session(s, session_path),
        input_fn=input_fn,
        output_fn=print,
        aux_types=_aux_types(args),
    )
    final_model = parse(sess.current_model_snapshot)
    counts = reports.metrics(final_model)
    print(
        f"done: {len(sess.iterations)} use cases processed; model now has "
        f"{counts.class_count} classes, {counts.method_count} methods, "
        f"{counts.relationship_count} relationships"
    )
    if args.output:
        Path(args.output).write_text(sess.current_model_snapshot, encoding="utf-8")
        print(f"wrote {args.output}")
    return 0


def _session_model(args) -> tuple[session_mod.Session, ClassModel, ClassModel, Corpus]:
    if not args.session:
        raise _Usage("--session is required for this command")
    sess = session_mod.load_session(Path(args.session))
    base_model = _read_diagram(sess.base_diagram_path)
    corpus = load_corpus(Path(sess.corpus_path))
    current = session_mod.verify_integrity(sess, base_model)
    return sess, base_model, current, corpus


def cmd_validate(args) -> int:
    if args.diagram:
        model = _read_diagram(args.diagram)
    elif args.session:
        sess = session_mod.load_session(Path(args.session))
        model = parse(sess.current_model_snapshot)
    else:
        raise _Usage("validate needs --diagram or --session")
    registry = type_registry(model, _aux_types(args))
    report = reports.lint(model, registry)
    sys.stdout.write(report.render_text())
    return 1 if report else 0


def cmd_report(args) -> int:
    sess, base_model, current, corpus = _session_model(args)
    registry = type_registry(current, _aux_types(args))
    rel_map = (
        reports.load_relationship_map(Path(args.relationship_map))
        if args.relationship_map
        else ()
    )
    delta = diffmerge.diff(base_model, current)
    matrix = reports.traceability(current, corpus, sess)
    gap_report = reports.gaps(current, corpus, sess, registry)
    rel_report = reports.relationship_validation(delta, rel_map)
    lint_report = reports.lint(current, registry)
    model_metrics = reports.metrics(current)

    if args.format == "json":
        print(
            json.dumps(
                {
                    "metrics": model_metrics.to_dict(),
                    "delta": json.loads(
                        diffmerge.summarize(delta, new_model=current).to_json()
                    ),
                    "traceability": json.loads(matrix.to_json()),
                    "relationship_validation": json.loads(rel_report.to_json()),
                    "gaps": json.loads(gap_report.to_json()),
                    "lint": json.loads(lint_report.to_json()),
                },
                indent=2,
            )
        )
    else:
        print("== Metrics ==")
        for key, value in model_metrics.to_dict().items():
            print(f"{key}: {value}")
        print("\n== Traceability ==")
        sys.stdout.write(matrix.render_text())
        print("\n== Relationship validation ==")
        sys.stdout.write(rel_report.render_text())
        print("\n== Gaps ==")
        sys.stdout.write(gap_report.render_text())
        print("\n== Lint ==")
        sys.stdout.write(lint_report.render_text())
    return 0


# --- parser wiring ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--diagram", help="path to a PlantUML class diagram")
    shared.add_argument("--corpus", help="directory of use-case tables")
    shared.add_argument("--backend", choices=["llm", "rules"], default="rules")
    shared.add_argument("--rules-file", help="rules mapping JSON for --backend rules")
    shared.add_argument("--session", help="session JSON file")
    shared.add_argument("--base-url", help="chat endpoint base URL for --backend llm")
    shared.add_argument("--model-name", help="model name for --backend llm")
    shared.add_argument(
        "--api-key-env",
        default="OPENAI_API_KEY",
        help="name of the environment variable holding the API key",
    )
    shared.add_argument("--timeout", type=float, default=30.0)
    shared.add_argument("--max-retries", type=int, default=3)
    shared.add_argument("--temperature", type=float, default=0.0)
    shared.add_argument(
        "--aux-types",
        help="comma-separated auxiliary type names known to the project",
    )
    shared.add_argument(
        "--relationship-map",
        help="JSON map of relationships to the use cases that justify them",
    )

    parser = argparse.ArgumentParser(
        prog="umlenrich",
        description="Enrich PlantUML class diagrams from natural-language use-case tables.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", parents=[shared], help="parse a diagram and report counts")
    p.add_argument("file")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("print", parents=[shared], help="reprint a diagram canonically")
    p.add_argument("file")
    p.set_defaults(func=cmd_print)

    p = sub.add_parser("diff", parents=[shared], help="summarize the delta between two diagrams")
    p.add_argument("old")
    p.add_argument("new")
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("suggest", parents=[shared], help="suggestions for one use case")
    p.add_argument("--uc", required=True, help="use-case ID (aliases accepted)")
    p.set_defaults(func=cmd_suggest)

    p = sub.add_parser("enrich", parents=[shared], help="run the enrichment loop")
    p.add_argument(
        "--mode",
        choices=["interactive", "accept-all", "reject-all"],
        default="interactive",
    )
    p.add_argument("--output", help="also write the final diagram text here")
    p.set_defaults(func=cmd_enrich)

    p = sub.add_parser("validate", parents=[shared], help="lint a diagram or session snapshot")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("report", parents=[shared], help="emit the evaluation reports")
    p.add_argument("--format", choices=["json", "text"], default="text")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _Usage as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except UmlEnrichError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
