"""Exception types raised across the package."""


class CitsError(ValueError):
    """Base class for all domain errors raised by this package."""


class SeriesTooShortError(CitsError):
    pass


class InvalidNodeError(CitsError):
    pass


class SingularCovarianceError(CitsError):
    pass


class DegenerateVarianceError(CitsError):
    pass


class InsufficientSamplesError(CitsError):
    pass


class RankDeficientError(CitsError):
    """Design matrix of a weight regression is rank deficient.

    The offending target variable is stored on ``variable`` (1-based).
    """

    def __init__(self, message, variable=None):
        super().__init__(message)
        self.variable = variable


class UndefinedRateError(CitsError):
    pass


class DimensionMismatchError(CitsError):
    pass


class SpikeFormatError(CitsError):
    """Malformed spike file; ``line`` holds the 1-based line number."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class DomainError(CitsError):
    pass
