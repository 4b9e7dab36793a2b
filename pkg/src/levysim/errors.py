"""Exception hierarchy shared by all numerical modules."""


class LevySimError(Exception):
    """Base class for all errors raised by levysim."""


class ParameterDomainError(LevySimError, ValueError):
    """A model or algorithm parameter violates its admissible range."""


class UnsupportedModelError(LevySimError):
    """The requested model is outside what the library handles."""


class NumericalDomainError(LevySimError, ArithmeticError):
    """A non-finite value appeared where a finite one was required."""


class AccuracyUnreachableError(LevySimError):
    """The requested tolerance cannot be met with admissible contours.

    Attributes
    ----------
    best_estimate : float
        Best error estimate that could be achieved.
    """

    def __init__(self, message, best_estimate=float("nan")):
        super().__init__(message)
        self.best_estimate = best_estimate


class BranchCutError(LevySimError):
    """The argument of a logarithm crossed the negative real axis along a contour."""


class PreconditionError(LevySimError, ValueError):
    """An operation was called outside its documented domain."""


class JointDeformationError(LevySimError):
    """No joint (q, xi) contour configuration passed the feasibility scan."""


class ExtrapolationInstabilityError(LevySimError):
    """Wynn rho extrapolation broke down.

    Attributes
    ----------
    partial : float
        Best value obtained before the breakdown.
    """

    def __init__(self, message, partial=float("nan")):
        super().__init__(message)
        self.partial = partial


class DegenerateConditioningError(LevySimError):
    """Conditioning on an event whose density underflows."""


class TableConstructionError(LevySimError):
    """A precomputed table violates its invariants."""


class QuantileError(LevySimError):
    """A quantile could not be bracketed or solved."""


class CoverageError(LevySimError):
    """A point fell outside every rectangle of a partition."""


class TableFormatError(LevySimError):
    """A serialized table has the wrong magic or version."""
