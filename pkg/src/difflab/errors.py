"""Exception types raised across difflab."""


class DiffLabError(ValueError):
    """Base class for all library errors."""


class NonPositiveWeight(DiffLabError):
    pass


class WeightSumMismatch(DiffLabError):
    pass


class DimensionMismatch(DiffLabError):
    pass


class NonPositiveVariance(DiffLabError):
    pass


class NegativeTime(DiffLabError):
    pass


class NonPositiveTime(DiffLabError):
    pass


class InvalidInterval(DiffLabError):
    pass


class InvalidRange(DiffLabError):
    pass


class InvalidGrid(DiffLabError):
    pass


class NegativeLambda(DiffLabError):
    pass


class DimensionUnsupported(DiffLabError):
    pass


class NonFiniteError(DiffLabError):
    """Raised when a computation produces NaN or Inf."""


class NonFiniteLoss(NonFiniteError):
    pass


class NonFiniteState(NonFiniteError):
    pass


class ConfigError(DiffLabError):
    pass
