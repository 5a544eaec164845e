"""Exception types shared across the package."""

from __future__ import annotations


class SmcError(Exception):
    """Base class for all library errors.

    Every error carries a short machine-readable ``code`` so the CLI can map
    failures onto exit codes without string matching.
    """

    code = "error"

    def __init__(self, message: str, code: str | None = None):
        super().__init__(message)
        if code is not None:
            self.code = code


class ValidationError(SmcError):
    """Raised when an instance or request violates a structural invariant."""

    code = "validation"


class InvalidCoverError(SmcError):
    """Raised when a cycle cover is structurally malformed."""

    code = "invalid-cover"


class BudgetExceededError(SmcError):
    """Raised by exact solvers when the input exceeds their hard budget."""

    code = "budget-exceeded"


class FormatError(SmcError):
    """Raised when an instance or solution file cannot be parsed."""

    code = "format"
