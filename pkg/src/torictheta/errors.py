"""Exception hierarchy shared by every module of the package."""


class ToricThetaError(Exception):
    """Base class for all errors raised by this package."""


class NotPositiveDefinite(ToricThetaError, ValueError):
    pass


class TailBoundFailure(ToricThetaError):
    """The certified truncation radius needs more vectors than the budget allows."""


class EnumerationBudget(TailBoundFailure):
    pass


class DimensionUnsupported(ToricThetaError, ValueError):
    pass


class WeightNotSmooth(ToricThetaError, ValueError):
    pass


class TailNotDominated(ToricThetaError):
    """The integrand is not dominated by the measure's declared decay envelope."""


class SlopeRangeTooNarrow(ToricThetaError, ValueError):
    pass


class GridNotConverged(ToricThetaError):
    pass


class ConfigInvalid(ToricThetaError, ValueError):
    pass


class ComputeError(ToricThetaError):
    """A computation could not be completed to the requested accuracy."""


class VerifyFailed(ToricThetaError):
    pass
