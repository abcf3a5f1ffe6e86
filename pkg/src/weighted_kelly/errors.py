"""Exception hierarchy. Class names are part of the CLI's JSON error contract."""


class WeightedKellyError(Exception):
    """Base class for every error raised by this package."""


class MarketError(WeightedKellyError, ValueError):
    pass


class ProbSumError(MarketError):
    pass


class NegativeWeight(MarketError):
    pass


class NonPositiveProb(MarketError):
    pass


class NonPositiveReference(MarketError):
    pass


class DuplicateOutcome(MarketError):
    pass


class InvalidM(MarketError):
    pass


class NotPositiveDefinite(MarketError):
    pass


class CovariancesEqual(MarketError):
    pass


class DimensionMismatch(MarketError):
    pass


class QuadratureNotConverged(WeightedKellyError):
    def __init__(self, message, value=None, error_estimate=None):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate


class ZeroReturnOutcome(WeightedKellyError):
    pass


class AllReturnsNearZero(WeightedKellyError):
    pass


class DOutOfRange(WeightedKellyError, ValueError):
    pass


class NoMartingaleStrategy(WeightedKellyError):
    pass


class NegativeStake(WeightedKellyError):
    pass


class RuinViolation(WeightedKellyError):
    """Wealth factor ``1 + C*g/Z`` was not strictly positive.

    ``step`` is the 1-based trial index and ``prefix`` the outcome history
    leading to the failing node, when known.
    """

    def __init__(self, message, step=None, prefix=None):
        super().__init__(message)
        self.step = step
        self.prefix = None if prefix is None else tuple(prefix)


class EnumerationTooLarge(WeightedKellyError):
    pass


class SchemaError(WeightedKellyError, ValueError):
    pass
