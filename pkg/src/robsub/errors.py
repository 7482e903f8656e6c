"""Exception hierarchy.

Every error derives from ``ValueError`` so callers that only know about the
builtin keep catching domain failures.
"""

from typing import Optional


class RobsubError(ValueError):
    """Base class of every error raised by robsub."""


class ValidationError(RobsubError):
    """Malformed input data: negative weights, bad partitions, empty lists."""


class DomainError(RobsubError):
    """An argument lies outside the domain of an operation."""


class InfeasibleError(RobsubError):
    """A constraint or covering target admits no solution."""


class UnsupportedError(RobsubError):
    """The requested operation is not available for this constraint."""


class RoundingError(RobsubError):
    """No prefix of the fractional chain contains a feasible set."""


class OracleBudgetError(RobsubError):
    """Exhaustive enumeration would exceed the configured budget."""


class InstanceFormatError(ValidationError):
    """An instance file could not be parsed.

    Attributes:
        field (Optional[str]): Dotted path of the offending field, if known.
    """

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)
