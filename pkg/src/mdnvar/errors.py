"""Exception hierarchy.

Every error raised by the engine derives from :class:`MdnVarError`. The CLI
maps the three families below onto process exit codes.
"""
from __future__ import annotations


class MdnVarError(Exception):
    """Base class for all engine errors."""

    exit_code = 1


class DomainError(MdnVarError, ValueError):
    """An argument lies outside the domain of a function."""

    exit_code = 3


# -- data validation (exit 3) -------------------------------------------------


class DataError(MdnVarError):
    exit_code = 3


class ParseError(DataError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class OrderingError(DataError):
    pass


class EmptyInputError(DataError):
    pass


class BoundaryGapError(DataError):
    pass


class InsufficientDataError(DataError):
    pass


class RangeError(DataError):
    pass


class AlignmentError(DataError):
    pass


# -- numerical failures (exit 4) ----------------------------------------------


class NumericError(MdnVarError):
    exit_code = 4


class NonStationaryError(NumericError):
    pass


class GarchFitError(NumericError):
    def __init__(self, message: str, best: dict | None = None):
        self.best = best or {}
        super().__init__(message)


class SelectionError(NumericError):
    pass


class TrainingError(NumericError):
    def __init__(self, message: str, history: list | None = None):
        self.history = history or []
        super().__init__(message)
