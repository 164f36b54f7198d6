"""Exception types shared across the package."""

from __future__ import annotations


class ValidationError(ValueError):
    """Raised when inputs violate a documented precondition."""


class ParseError(ValidationError):
    """Raised when a delimited input file cannot be parsed.

    Messages include the 1-based line number and, where known, the column
    name so the offending cell can be located in the source file.
    """


class CalibrationError(ArithmeticError):
    """Raised when a null-scale estimate is unusable (for example, a
    nonpositive variance estimate that cannot standardize a statistic)."""
