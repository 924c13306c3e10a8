"""Exception hierarchy.

ValidationError maps to CLI exit code 2 (bad inputs or configuration),
NumericError to exit code 3 (a computation failed to converge or a
discretisation was too coarse to trust).
"""


class ProjlogError(Exception):
    """Base class for all library errors."""


class ValidationError(ProjlogError):
    """Invalid input data or configuration."""


class NumericError(ProjlogError):
    """A numerical procedure failed its own quality contract."""


class ZeroVector(ValidationError):
    """Attempted to normalize the zero vector."""


class DimensionMismatch(ValidationError):
    """Operands live over different ambient dimensions."""


class ChartUndefined(ValidationError):
    """Point too close to the hyperplane at infinity of the requested chart."""


class NonpositiveEpsilon(ValidationError):
    """Regularization parameter must be strictly positive."""


class AlphaOutOfRange(ValidationError):
    """Riesz exponent must satisfy 0 < alpha < 2n."""


class NegativeWeight(ValidationError):
    """Measure weights must be strictly positive."""


class WeightSumMismatch(ValidationError):
    """Measure weights must sum to one."""


class EmptyMeasure(ValidationError):
    """A measure needs at least one atom."""


class CombinatorialBlowup(ValidationError):
    """Exact tuple expansion would exceed the configured term cap."""


class SingularStencil(NumericError):
    """A finite-difference stencil touched a singular point of the field."""


class NegativeDensity(NumericError):
    """Computed density is negative beyond the noise tolerance (step too large)."""


class GridTooCoarse(NumericError):
    """Grid self-check failed; results at this resolution are not trustworthy."""


class NonConvergent(NumericError):
    """Adaptive quadrature did not reach its error target."""
