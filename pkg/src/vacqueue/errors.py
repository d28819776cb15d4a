"""Exception types shared across the package."""


class VacqueueError(Exception):
    """Base class for all package-specific errors."""


class DomainError(VacqueueError):
    """An argument lies outside the mathematical domain of an operation."""


class NoFiniteMean(VacqueueError):
    """The distribution has no finite first moment."""


class NoDensity(VacqueueError):
    """The distribution has no density with respect to Lebesgue measure."""


class InfiniteDeadline(VacqueueError):
    """An operation requiring a finite patience deadline received an infinite one."""


class UnstableModel(VacqueueError):
    """The model failed the stability gate; pass force=True to override."""


class NotPoissonArrivals(VacqueueError):
    """The stationary solver requires exponentially distributed inter-arrival times."""


class PatienceNotExponential(VacqueueError):
    """The operation requires exponentially distributed patience."""


class NoConvergence(VacqueueError):
    """The fixed-point iteration did not converge within the allowed iterations."""

    def __init__(self, iterations, message=None):
        self.iterations = iterations
        super().__init__(message or f"no convergence after {iterations} iterations")


class TailMassTooLarge(VacqueueError):
    """Too much probability mass lies beyond the solver grid; increase x_max."""


class SeriesDiverges(VacqueueError):
    """The transform series product failed to decay within the term budget."""


class GridTooShort(VacqueueError):
    """Fewer usable grid points than the operation needs."""


class InsufficientTailData(VacqueueError):
    """Too few tail exceedances to estimate the requested quantile ratios."""


class ParseError(VacqueueError):
    """Run configuration text could not be parsed."""


class ValidationError(VacqueueError):
    """Run configuration parsed but violated an invariant."""
