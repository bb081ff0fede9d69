"""Exception hierarchy.

Input problems (bad files, bad flags, out-of-domain arguments) derive from
``ValueError``; numeric failures derive from ``ArithmeticError``. The CLI
maps the first group to exit code 2 and the second to exit code 1.
"""


class SadsacError(Exception):
    """Base class for all package errors."""


class ValidationError(SadsacError, ValueError):
    """An input violates a documented invariant."""


class ParseError(ValidationError):
    """A data file could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigurationError(ValidationError):
    """A required setting (such as ``t0``) is missing or inconsistent."""


class DomainError(ValidationError):
    """An argument lies outside the domain of an estimator."""


class InsufficientDataError(ValidationError):
    """Too little data for the requested statistic."""


class NumericError(SadsacError, ArithmeticError):
    """A numerical routine failed to reach its tolerance."""


class SingularPointError(NumericError):
    """A ratio estimator has a zero denominator at the requested point."""
