"""Exception hierarchy shared by every module of the package."""


class OccupancyError(Exception):
    """Base class for all errors raised by :mod:`occupancy`."""


class ErgodicityError(OccupancyError, ValueError):
    """The driving chain is reducible or periodic.

    ``prop`` names the failing property (``"irreducible"`` or ``"aperiodic"``).
    """

    def __init__(self, prop, message=None):
        self.prop = prop
        super().__init__(message or f"transition matrix is not {prop}")


class CapExceeded(OccupancyError, RuntimeError):
    """A computation would exceed its configured work cap."""

    def __init__(self, message, *, work=None, cap=None):
        self.work = work
        self.cap = cap
        super().__init__(message)


class BoundNotApplicable(OccupancyError, ValueError):
    """The validity condition of a bound does not hold.

    ``threshold`` carries the smallest value of ``n`` that the bound needs
    (the condition is always ``n > threshold``).
    """

    def __init__(self, message, *, threshold=None):
        self.threshold = threshold
        super().__init__(message)


class UnsupportedOperation(OccupancyError, TypeError):
    """The operation needs a Markov driver but the model uses a path hook."""


class ConfigError(OccupancyError, ValueError):
    """A run configuration failed validation."""

    def __init__(self, message, *, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
