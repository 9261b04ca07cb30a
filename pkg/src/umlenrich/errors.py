"""Exception hierarchy shared across the package.

Everything raised on purpose derives from :class:`UmlEnrichError`, so the CLI
can map "our" failures to exit code 3 while genuine bugs still traceback.
"""

from __future__ import annotations


class UmlEnrichError(Exception):
    """Base class for all errors raised by this package."""


# --- model -----------------------------------------------------------------

class ModelError(UmlEnrichError):
    """Base for class-model violations."""


class InvariantViolation(ModelError):
    """A model value violates its structural invariants."""


class UnknownClass(ModelError):
    """An operation referenced a class name that is not in the model."""


class SignatureConflict(ModelError):
    """A method with the same signature but conflicting definition exists."""


class CycleError(ModelError):
    """Adding a generalization edge would make the inheritance graph cyclic."""


# --- use-case ingestion ----------------------------------------------------

class SchemaError(UmlEnrichError):
    """A use-case table is missing a required row (names the first one)."""

    def __init__(self, key: str, message: str | None = None):
        super().__init__(message or f"missing required row: {key}")
        self.key = key


class DuplicateKey(UmlEnrichError):
    """A use-case table repeats a row key."""


class DuplicateId(UmlEnrichError):
    """Two corpus files declare the same use-case ID."""


# --- suggestion backends ---------------------------------------------------

class MappingError(UmlEnrichError):
    """A rules-mapping entry is unusable against the current model."""


class AuthError(UmlEnrichError):
    """The chat endpoint rejected our credentials (or none were configured)."""


class TransportError(UmlEnrichError):
    """The chat endpoint stayed unreachable/failing after all retries."""


class MalformedReply(UmlEnrichError):
    """The chat reply carried no parseable fenced diagram block."""


class DestructiveReply(UmlEnrichError):
    """The chat reply dropped or altered elements of the input diagram."""


# --- reports ---------------------------------------------------------------

class UnknownUseCase(UmlEnrichError):
    """A recorded decision cites a use-case ID unknown even after aliasing."""


# --- pipeline / session ----------------------------------------------------

class NonInteractiveEnvironment(UmlEnrichError):
    """Interactive review was requested but no terminal is attached."""


class SessionError(UmlEnrichError):
    """A session file is unreadable, version-incompatible, or inconsistent."""
