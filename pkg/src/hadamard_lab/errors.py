"""Exception types shared across the package."""


class DomainError(ValueError):
    """Arguments outside an operation's domain (space mismatch, bad t, ...)."""


class CapacityError(RuntimeError):
    """An enumeration or support size exceeded its configured cap."""


class ConvergenceError(RuntimeError):
    """An iterative solver failed to reach tolerance.

    The best iterate found is kept on ``best``.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class PrecisionError(RuntimeError):
    """Self-refining quadrature did not stabilise."""
