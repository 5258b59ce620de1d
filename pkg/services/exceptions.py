"""
Exception hierarchy shared by all services.
"""
from typing import Optional, Sequence


class LabError(Exception):
    """Base class for every error raised by the lab."""
    pass


class ValidationError(LabError, ValueError):
    """Invalid parameter, config value or catalog name."""

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key


class DivergenceError(LabError):
    """A simulated state became non-finite."""

    def __init__(self, message: str, step: int, index: Optional[int] = None, state: Optional[Sequence[float]] = None):
        super().__init__(message)
        self.step = step
        self.index = index
        self.state = state


class SinkhornConvergenceError(LabError):
    """Sinkhorn scaling hit its iteration cap."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class StabilityError(LabError):
    """Explicit Fokker-Planck step requested with dt above the stability bound."""

    def __init__(self, message: str, dt: float, bound: float):
        super().__init__(message)
        self.dt = dt
        self.bound = bound


class SchemeError(LabError):
    """Density went negative beyond tolerance."""
    pass


class ConvergenceError(LabError):
    """Iterative procedure exceeded its step cap."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class DomainError(LabError):
    """Geometry (ball, circle, particles) falls outside the grid."""
    pass


class ArtifactError(LabError):
    """Output directory missing, unwritable, or an artifact path escapes it."""
    pass
