"""umlenrich: enrich PlantUML class diagrams from natural-language use cases.

The public surface re-exports the domain types and the operations of each
stage: model primitives, PlantUML parse/render, use-case ingestion,
suggestion backends, diff/merge, reports, and the session-backed pipeline.
"""

from .diffmerge import DeltaSummary, ModelDelta, diff, missing_elements, summarize
from .errors import (
    AuthError,
    CycleError,
    DestructiveReply,
    DuplicateId,
    DuplicateKey,
    InvariantViolation,
    MalformedReply,
    MappingError,
    ModelError,
    NonInteractiveEnvironment,
    SchemaError,
    SessionError,
    SignatureConflict,
    TransportError,
    UmlEnrichError,
    UnknownClass,
    UnknownUseCase,
)
from .model import (
    Association,
    Attribute,
    ClassDef,
    ClassModel,
    Generalization,
    Method,
    Parameter,
    Relationship,
    TypeRegistry,
    Visibility,
    add_class,
    add_method,
    add_relationship,
    canonical_equal,
    find_class,
    type_registry,
)
from .plantuml import ParseError, ParseErrorKind, SourceSpan, parse, render
from .reports import (
    GapReport,
    LintReport,
    Metrics,
    TraceabilityMatrix,
    gaps,
    lint,
    metrics,
    relationship_validation,
    traceability,
)
from .session import Decision, IterationRecord, Session, load_session, save_session
from .suggest import (
    LlmBackend,
    LlmConfig,
    MappingConfig,
    RulesBackend,
    Suggestion,
    SuggestionSet,
    apply_suggestions,
    build_prompt,
    extract_suggestions,
    llm_suggest,
    load_mapping,
    rules_suggest,
)
from .usecases import Corpus, UseCase, load_corpus, parse_usecase, render_usecase

__version__ = "0.1.0"
