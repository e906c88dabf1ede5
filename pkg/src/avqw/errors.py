"""Exception types raised by the toolkit.

Every error names the violated invariant and, where it makes sense, carries
the measured deviation so callers can log or re-raise with context.
"""


class ToolkitError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(ToolkitError):
    """Input data violates a declared invariant."""

    def __init__(self, message, deviation=None, location=None):
        self.deviation = deviation
        self.location = location
        if location is not None:
            message = f"{location}: {message}"
        if deviation is not None:
            message = f"{message} (deviation {deviation:.3e})"
        super().__init__(message)


class NotHermitian(ValidationError):
    pass


class NotPSD(ValidationError):
    pass


class TraceNotOne(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class AlphabetMismatch(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class BadBlockLength(ValidationError):
    pass


class OutOfRange(ValidationError):
    pass


class ParseError(ToolkitError):
    """A channel file could not be parsed; message points at the field."""


class BudgetError(ToolkitError):
    """A configured size cap would be exceeded; message states the budget."""


class GridTooLarge(BudgetError):
    pass


class EnumerationTooLarge(BudgetError):
    pass


class DimensionCap(BudgetError):
    pass


class EmptyTypicalSet(ToolkitError):
    """No word satisfies the typicality constraint at this block length."""


class HypothesisViolated(ToolkitError):
    """A lemma or theorem hypothesis fails on the supplied instance."""


class NotSymmetrizable(HypothesisViolated):
    """Operation requires a symmetrizable legal family."""


class SymmetrizableHypothesisViolated(HypothesisViolated):
    """Operation assumes a non-symmetrizable legal family."""


class NonConvergence(ToolkitError):
    """Solver exhausted its iteration budget; carries the best value found."""

    def __init__(self, message, best_value=None):
        self.best_value = best_value
        super().__init__(message)
