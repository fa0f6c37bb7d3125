"""Exception hierarchy shared by every module."""

from __future__ import annotations


class OrbitDuelError(Exception):
    """Base class for all package errors."""


class SymmetryError(OrbitDuelError, ValueError):
    """A matrix expected to be Hermitian is not, beyond tolerance."""


class DomainError(OrbitDuelError, ValueError):
    """An input lies outside the domain of the operation."""


class SingularityError(OrbitDuelError, ValueError):
    """A matrix expected to be positive definite is (numerically) singular."""


class ShapeError(OrbitDuelError, ValueError):
    """Operand shapes are incompatible."""


class GeometryError(OrbitDuelError, ValueError):
    """Link geometry is invalid (satellite below horizon, nothing visible, ...)."""


class ConfigError(OrbitDuelError, ValueError):
    """Invalid configuration value or unknown configuration key."""


class TrackFormatError(OrbitDuelError, ValueError):
    """Malformed track file. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalDivergenceError(OrbitDuelError, ArithmeticError):
    """The game solver produced non-finite values.

    ``history`` holds the iterates recorded up to the failure.
    """

    def __init__(self, message: str, history: list | None = None):
        super().__init__(message)
        self.history = history or []
