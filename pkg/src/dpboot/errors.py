"""Exception types shared across the package."""


class DpBootError(Exception):
    """Base class for all package-specific errors."""


class InvalidParameterError(DpBootError, ValueError):
    """A numeric argument is outside its legal domain."""


class InvalidBoundsError(DpBootError, ValueError):
    """Bounds are malformed, non-finite, or do not match the data shape."""


class InvalidBudgetError(DpBootError, ValueError):
    """A privacy budget is non-positive or otherwise unusable."""


class EmptyInputError(DpBootError, ValueError):
    """An operation that needs at least one element received none."""


class NumericalFailureError(DpBootError, RuntimeError):
    """An iterative or linear-algebra routine failed to produce a result.

    ``last_iterate`` carries the final iterate of a failed solve when one
    is available, for post-mortem inspection.
    """

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class SingularReleaseError(NumericalFailureError):
    """A released noisy system is numerically singular."""


class ReplicateFailureError(DpBootError, RuntimeError):
    """A bootstrap replicate could not be generated."""


class UnsupportedEstimatorError(DpBootError, TypeError):
    """The estimator does not provide what the requested method needs."""


class InvalidConfigError(DpBootError, ValueError):
    """An experiment configuration failed validation."""
