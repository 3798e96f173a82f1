from django.core.exceptions import ValidationError


class InvalidConfigError(ValidationError):
    """A scenario, experiment or solver configuration is unusable."""


class InvalidBiasError(ValidationError):
    """A biasing factor is nonpositive or the factor list is malformed."""


class ProblemTooLargeError(ValueError):
    """Exhaustive enumeration would exceed the configured cap."""


class EmptySampleError(ValueError):
    """A quantile or percentile was asked of an empty sample."""


class UndefinedRatioError(ValueError):
    """The baseline quantile is zero, so the rate ratio has no value."""


class InvariantViolationError(AssertionError):
    """A bound that must hold between solver results was broken."""
