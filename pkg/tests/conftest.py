from __future__ import annotations

from pathlib import Path

import pytest

import umlenrich
from umlenrich.model import ClassModel
from umlenrich.pipeline import MODE_ACCEPT_ALL, run_enrich
from umlenrich.plantuml import parse
from umlenrich.session import Session
from umlenrich.suggest import RulesBackend
from umlenrich.usecases import Corpus, load_corpus

DATA_DIR = Path(umlenrich.__file__).parent / "data" / "waste_recycling"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def initial_text() -> str:
    return (DATA_DIR / "initial.puml").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def enhanced_text() -> str:
    return (DATA_DIR / "enhanced.puml").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def initial_model(initial_text) -> ClassModel:
    return parse(initial_text)


@pytest.fixture(scope="session")
def enhanced_model(enhanced_text) -> ClassModel:
    return parse(enhanced_text)


@pytest.fixture(scope="session")
def corpus() -> Corpus:
    return load_corpus(DATA_DIR / "usecases")


@pytest.fixture(scope="session")
def aux_types() -> tuple[str, ...]:
    lines = (DATA_DIR / "auxiliary_types.txt").read_text(encoding="utf-8").split()
    return tuple(lines)


@pytest.fixture(scope="session")
def rules_backend(corpus) -> RulesBackend:
    return RulesBackend.from_file(DATA_DIR / "mapping.json", corpus.id_aliases)


def run_golden_session(initial_model, corpus, rules_backend) -> Session:
    session = Session(
        base_diagram_path=str(DATA_DIR / "initial.puml"),
        corpus_path=str(DATA_DIR / "usecases"),
        backend_spec={"type": "rules", "rules_file": str(DATA_DIR / "mapping.json")},
    )
    run_enrich(session, corpus, rules_backend, MODE_ACCEPT_ALL, initial_model)
    return session


@pytest.fixture(scope="session")
def golden_session(initial_model, corpus, rules_backend) -> Session:
    return run_golden_session(initial_model, corpus, rules_backend)


@pytest.fixture(scope="session")
def golden_model(golden_session) -> ClassModel:
    return parse(golden_session.current_model_snapshot)
