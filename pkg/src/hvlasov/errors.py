"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """An argument is outside the domain an operation accepts."""


class OutOfRange(ValueError):
    """A time or coordinate lies outside the range covered by stored data."""


class IterationFailure(RuntimeError):
    """A fixed-point or corrector iteration did not converge.

    The residual sequence is kept on the exception so callers can report it.
    """

    def __init__(self, message, residuals=()):
        super().__init__(message)
        self.residuals = list(residuals)
