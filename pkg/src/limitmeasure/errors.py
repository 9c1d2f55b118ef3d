"""Exception types shared across the package."""


class InvalidSystemError(ValueError):
    """A system specification violates its contract (non-SPD diffusion, bad gradient, ...)."""


class EscapeError(RuntimeError):
    """A trajectory left the safe ball of its system.

    Parameters
    ----------
    message : str
        Human readable description.
    step : int, optional
        Index of the first state outside the safe radius.
    time : float, optional
        Time at which the escape was detected.
    """

    def __init__(self, message, step=None, time=None):
        super().__init__(message)
        self.step = step
        self.time = time


class LimitCheckError(ValueError):
    """A caller-asserted limit-set relation could not be confirmed numerically."""
