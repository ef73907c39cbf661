"""
utils/exceptions.py

Exception hierarchy shared by every package. The CLI maps UsageError to
exit status 2 and any other WeightingError to exit status 1.
"""

from typing import Any, Optional


class WeightingError(Exception):
    """Base class for all errors raised by this project."""


class DomainError(WeightingError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConvergenceError(WeightingError, RuntimeError):
    """An iterative solver hit its iteration limit.

    `best` holds the best iterate found (scalar or ndarray).
    """

    def __init__(self, message: str, best: Any = None, iterations: int = 0):
        super().__init__(message)
        self.best = best
        self.iterations = iterations


class PreconditionError(WeightingError):
    """A solver was called outside the regime it is exact for."""


class StudyFormatError(WeightingError):
    """A study file could not be parsed."""

    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None):
        where = []
        if path:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{':'.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.path = path


class StudyValidationError(WeightingError, ValueError):
    """A study row violates a field bound."""

    def __init__(self, message: str, row_id: Optional[str] = None):
        super().__init__(f"row {row_id!r}: {message}" if row_id is not None else message)
        self.row_id = row_id


class UsageError(WeightingError):
    """Invalid command-line flag combination or configuration."""
