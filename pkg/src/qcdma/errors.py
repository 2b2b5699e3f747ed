"""Exception types shared across the simulator."""


class QcdmaError(Exception):
    """Base class for all simulator errors."""


class DomainError(QcdmaError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ConfigError(QcdmaError, ValueError):
    """Inconsistent or invalid configuration."""


class DivergenceError(QcdmaError, ArithmeticError):
    """A trajectory left its bounding box.

    Attributes
    ----------
    step : int
        Index of the first integration step whose result was out of bounds.
    """

    def __init__(self, step, message=None):
        self.step = int(step)
        super().__init__(message or f"trajectory diverged at step {self.step}")


class TruncationError(QcdmaError, ArithmeticError):
    """Number-basis cutoff too small for the amplitudes in play."""
