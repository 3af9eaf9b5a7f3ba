"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A parameter lies outside the range an operation accepts."""


class InsufficientDataError(ValueError):
    """A series is too short for the requested statistic."""


class NoTransitionError(RuntimeError):
    """No survival threshold lies inside [0, 1] for the given system."""
