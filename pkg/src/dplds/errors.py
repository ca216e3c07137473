"""Exception types shared across the package.

The CLI maps each family onto an exit code, so new errors should subclass
one of the three roots below rather than ``Exception`` directly.
"""


class DpldsError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ValidationError(DpldsError, ValueError):
    """Malformed input: bad shapes, out-of-range parameters, parse failures."""

    exit_code = 2


class DimensionError(ValidationError):
    """Matrix or vector dimensions are inconsistent.

    Attributes
    ----------
    matrix : str or None
        Name of the offending matrix, when one can be singled out.
    """

    def __init__(self, message, matrix=None):
        super().__init__(message)
        self.matrix = matrix


class NotPositiveDefiniteError(ValidationError):
    """A covariance or weight matrix failed the definiteness test."""


class DegeneratePriorError(ValidationError):
    """A rank-deficient prior was passed where a strict one is required."""


class InfeasibleError(DpldsError, ValueError):
    """No finite noise satisfies the request (e.g. ``gamma == 1``)."""

    exit_code = 3


class RankDeficientError(InfeasibleError):
    """The lifted operator is not full row rank."""


class NumericalError(DpldsError, ArithmeticError):
    """A numerical routine failed to produce a trustworthy result."""

    exit_code = 4
