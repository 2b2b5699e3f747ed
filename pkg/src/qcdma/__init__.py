"""Simulation toolkit for entanglement distribution over a chaotic-phase CDMA network."""

from .errors import ConfigError, DivergenceError, DomainError, QcdmaError, TruncationError

__version__ = "0.1.0"

__all__ = ["ConfigError", "DivergenceError", "DomainError", "QcdmaError", "TruncationError"]
