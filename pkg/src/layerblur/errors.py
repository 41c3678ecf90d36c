"""Exception types raised across the package."""


class LayerBlurError(Exception):
    """Base class for package errors."""


class InvalidMotionError(LayerBlurError, ValueError):
    """An affine motion is not invertible / orientation preserving."""


class ShapeError(LayerBlurError, ValueError):
    """Image or operator dimensions do not agree."""


class SizeError(LayerBlurError, ValueError):
    """A dense construction was requested for a too-large problem."""


class NumericError(LayerBlurError, ArithmeticError):
    """A solver produced a non-finite value."""


class ConfigError(LayerBlurError, ValueError):
    """A configuration makes a sub-problem ill-posed."""


class SingleMotionError(LayerBlurError):
    """The flow field does not support a second dominant motion."""


class DegenerateMaskError(LayerBlurError, ValueError):
    """A label region needed for initialization is empty."""
