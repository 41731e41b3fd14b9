"""Domain errors raised by the tvgeo library.

Every error is a ValueError so that callers who only care about "bad input"
can keep catching ValueError, while the tools can report the specific kind.
"""


class TvgeoError(ValueError):
    """Base class for all tvgeo domain errors."""


class NonFiniteInput(TvgeoError):
    """An input image contains NaN or Inf."""


class StepTooLarge(TvgeoError):
    """The dual step size violates tau < 2/||grad||^2."""


class InfeasibleDual(TvgeoError):
    """A dual field leaves the per-pixel unit ball."""


class EmptyOpening(TvgeoError):
    """Erosion by the requested radius leaves nothing."""


class NotBracketed(TvgeoError):
    """A root search found no sign change on its interval."""


class LambdaTooLarge(TvgeoError):
    """The regularization weight is outside the range a closed form covers."""


class AlphaTooLarge(TvgeoError):
    """The outer calibration leaves the unit ball for this alpha."""


class EmptyContour(TvgeoError):
    """An operation needs at least one curve vertex."""


class RadiusTooSmall(TvgeoError):
    """The ball radius covers too few pixels for a meaningful count."""


class NoOracle(TvgeoError):
    """No closed-form certificate exists for this shape."""


class ShapeSpecError(TvgeoError):
    """A plain-text shape description could not be parsed."""


class FormatError(TvgeoError):
    """A file is not in the expected format."""
