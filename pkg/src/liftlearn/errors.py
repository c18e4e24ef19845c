"""Exception types shared across the package."""


class LiftLearnError(Exception):
    """Base class for errors raised by this package."""


class FormatError(LiftLearnError, ValueError):
    """A file does not conform to its documented layout."""


class DimensionError(LiftLearnError, ValueError):
    """Array shapes or layouts do not agree."""


class NonFiniteError(LiftLearnError, ValueError):
    """NaN or infinite values where finite data is required."""


class DivergenceError(LiftLearnError, RuntimeError):
    """An explicit time integration blew up."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class NoFeasibleRegularization(LiftLearnError, RuntimeError):
    """No candidate in a regularization grid satisfied the growth constraint."""
