"""Exception hierarchy shared by all zklab modules."""


class ZKLabError(Exception):
    """Base class for library errors."""


class InvalidInputError(ZKLabError, ValueError):
    """Non-finite samples, out-of-range parameters, non-dyadic indices."""


class UnsupportedOrderError(InvalidInputError):
    """Derivative order above the supported maximum."""


class ConfigurationError(ZKLabError, ValueError):
    """Grid/background/solver combination that cannot be honoured."""


class InsufficientStencilError(ZKLabError, ValueError):
    """A centered time difference was requested at a trajectory boundary."""


class InvalidSupportError(InvalidInputError):
    """Space-time field not localized where the norm requires it."""


class EmptySupportError(InvalidInputError):
    """A dyadic support region contains no lattice points."""


class ProbeMisconfigurationError(InvalidInputError):
    """Support specs violate the hypotheses of the requested estimate."""


class DivergenceError(ZKLabError, RuntimeError):
    """Time integration blew up; ``last_state`` is the last finite state."""

    def __init__(self, message, last_state=None, trajectory=None):
        super().__init__(message)
        self.last_state = last_state
        self.trajectory = trajectory
