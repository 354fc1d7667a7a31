"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class MicroformalError(Exception):
    """Base class for all errors raised by this package."""


class ContextError(MicroformalError):
    """Variable context mismatch: unknown variable, missing image, wrong arity."""


class TruncationError(MicroformalError):
    """Operands carry different truncation orders."""


class GradingError(MicroformalError):
    """A bigrade violates the pole bound (hbar exponent below -1 times the coupling grade)."""


class ValuationError(MicroformalError):
    """exp/log precondition failed (wrong constant term or coupling valuation)."""


class DegreeGuardError(MicroformalError):
    """A coefficient polynomial exceeded the configured degree guard."""


class DimensionError(MicroformalError):
    """Source/target dimensions do not match."""


class MatrixError(MicroformalError):
    """Singular or malformed coefficient matrix."""


class CompositionError(MicroformalError):
    """Composition produced an hbar-irregular exponent (grading bug)."""


class ConsistencyError(MicroformalError):
    """Internal consistency failure, e.g. a fixed-point iteration that did not stabilize."""


class ParseError(MicroformalError):
    """Syntax or validation error in textual input, annotated with a 1-based column."""

    def __init__(self, message: str, column: int | None = None):
        self.column = column
        if column is not None:
            message = f"{message} at column {column}"
        super().__init__(message)
