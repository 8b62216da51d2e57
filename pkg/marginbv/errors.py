"""Exception hierarchy for marginbv."""

from typing import Optional


class MarginBVError(Exception):
    """Base class for every error raised by marginbv."""


class CatalogueError(MarginBVError, KeyError):
    """Unknown loss name."""

    def __str__(self) -> str:
        # KeyError quotes its argument; keep the plain message
        return str(self.args[0]) if self.args else "unknown loss"


class ParameterError(MarginBVError, ValueError):
    """Invalid loss parameter or malformed loss spec."""


class ConfigError(MarginBVError, ValueError):
    """Invalid synthetic spec, training config or input file."""


class NumericError(MarginBVError, ArithmeticError):
    """A numeric evaluation produced a non-finite value."""

    def __init__(self, message: str, location: Optional[object] = None):
        super().__init__(message)
        self.location = location


class InvariantViolationError(NumericError):
    """A value fell outside the band allowed by a mathematical invariant."""


class ConvergenceError(NumericError):
    """An iterative solver hit its iteration cap."""


class TruncationError(NumericError):
    """The truncated limit of a Bregman divergence did not settle."""

    def __init__(self, message: str, last_value: float, truncation_g: float, last_delta: float):
        super().__init__(message, location=truncation_g)
        self.last_value = last_value
        self.truncation_g = truncation_g
        self.last_delta = last_delta


class DivergenceError(NumericError):
    """Training produced a non-finite loss or gradient."""

    def __init__(self, message: str, iteration: int):
        super().__init__(message, location=iteration)
        self.iteration = iteration


class LinkDomainError(MarginBVError, ValueError):
    """Link inversion failed or too many margins needed clamping."""


class DecompositionInapplicableError(MarginBVError, ValueError):
    """The requested decomposition does not hold for this loss."""


class ResampleError(MarginBVError, RuntimeError):
    """Bootstrap resampling kept producing single-class training sets."""
