"""Exception types shared across the package."""


class WeakRegError(ValueError):
    """Base class for input and precondition failures."""


class DimensionError(WeakRegError):
    """Shapes, indices or ground sets do not agree."""


class SizeError(WeakRegError):
    """An exact enumeration was asked for beyond its size threshold."""


class PreconditionError(WeakRegError):
    """An operation's documented precondition does not hold."""


class ConvergenceError(RuntimeError):
    """A refinement loop hit its round cap; ``certificate`` holds the last state."""

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate
