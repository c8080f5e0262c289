"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class BqkitError(Exception):
    """Base class for all toolkit errors."""


class BqParseError(BqkitError):
    """Syntax or well-formedness error in a theory or program text."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"line {line}, col {col}: {message}"
        super().__init__(message)


class GroundingError(BqkitError):
    """Variable instantiation failed (unknown types, unbounded variables, empty domains)."""


class TheoryValidationError(BqkitError):
    """Raised by pipeline entry points when a validation report contains errors."""


class StateError(BqkitError):
    """A literal set does not form a world state (incomplete, inconsistent, or not closed)."""


class TransitionError(BqkitError):
    """The transition function is undefined for a state/action pair."""


class NotExecutableError(TransitionError):
    pass


class ConflictingEffectsError(TransitionError):
    """Two fired causal laws demand complementary literals."""


class MultipleRewardsError(TransitionError):
    """Fired causal laws carry distinct rewards; no combination rule exists."""


class InconsistentSuccessorError(TransitionError):
    """Closing the successor under the static laws produced a complementary pair."""


class CapExceededError(BqkitError):
    """A configured resource cap (atoms, nodes, models) was exceeded."""


class MalformedTraceError(BqkitError):
    """An interpretation does not encode a single action occurrence trace."""


class NonTightProgramError(BqkitError):
    """Operation requires an acyclic positive dependency graph."""


class CorrectnessError(BqkitError):
    """A runtime cross-check between two independent computation routes failed."""
