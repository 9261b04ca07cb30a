#!/usr/bin/env python3
"""Replay the bundled waste-recycling enrichment end to end.

Runs the rules backend in accept-all mode over the 21-case corpus, starting
from the static diagram, then prints the before/after comparison, the
method-to-use-case traceability table, and the gap report. Artifacts
(session log, enriched diagram, JSON report) land in --outdir.
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

import umlenrich
from umlenrich.diffmerge import diff, summarize
from umlenrich.model import canonical_equal, type_registry
from umlenrich.pipeline import MODE_ACCEPT_ALL, run_enrich
from umlenrich.plantuml import parse
from umlenrich.reports import gaps, load_relationship_map, metrics, relationship_validation, traceability
from umlenrich.session import Session, save_session
from umlenrich.suggest import RulesBackend
from umlenrich.usecases import load_corpus

DATA = Path(umlenrich.__file__).parent / "data" / "waste_recycling"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", type=Path, default=Path("replay_out"))
    args = parser.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)

    corpus = load_corpus(DATA / "usecases")
    base = parse((DATA / "initial.puml").read_text(encoding="utf-8"))
    target = parse((DATA / "enhanced.puml").read_text(encoding="utf-8"))
    backend = RulesBackend.from_file(DATA / "mapping.json", corpus.id_aliases)
    aux_types = tuple((DATA / "auxiliary_types.txt").read_text().split())

    session = Session(
        base_diagram_path=str(DATA / "initial.puml"),
        corpus_path=str(DATA / "usecases"),
        backend_spec={"type": "rules", "rules_file": str(DATA / "mapping.json")},
    )
    session_path = args.outdir / "session.json"
    run_enrich(
        session,
        corpus,
        backend,
        MODE_ACCEPT_ALL,
        base,
        save=lambda s: save_session(s, session_path),
        aux_types=aux_types,
    )
    final = parse(session.current_model_snapshot)
    (args.outdir / "enriched.puml").write_text(session.current_model_snapshot, encoding="utf-8")

    before, after = metrics(base), metrics(final)
    print("Feature                      Initial   Enriched")
    print(f"Number of classes            {before.class_count:<9} {after.class_count}")
    print(f"Number of methods            {before.method_count:<9} {after.method_count}")
    print(f"Number of relationships      {before.relationship_count:<9} {after.relationship_count}")
    print(
        "Dynamic behaviors captured   "
        f"{'Yes' if before.dynamic_behaviors_captured else 'No':<9} "
        f"{'Yes' if after.dynamic_behaviors_captured else 'No'}"
    )
    print()
    print("Matches the bundled enriched diagram:",
          "yes" if canonical_equal(final, target) else "NO")
    print()

    matrix = traceability(final, corpus, session)
    print(matrix.render_text())

    registry = type_registry(final, aux_types)
    gap_report = gaps(final, corpus, session, registry)
    print(gap_report.render_text())

    delta = diff(base, final)
    rel_report = relationship_validation(delta, load_relationship_map(DATA / "relationship_map.json"))
    print(rel_report.render_text())

    report = {
        "metrics_before": before.to_dict(),
        "metrics_after": after.to_dict(),
        "delta": json.loads(summarize(delta, new_model=final).to_json()),
        "traceability": json.loads(matrix.to_json()),
        "gaps": json.loads(gap_report.to_json()),
        "relationship_validation": json.loads(rel_report.to_json()),
    }
    (args.outdir / "report.json").write_text(json.dumps(report, indent=2), encoding="utf-8")
    print(f"artifacts written to {args.outdir}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
