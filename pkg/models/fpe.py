"""
Fokker-Planck problem and boundary-quadrature models.
"""
from dataclasses import dataclass
from typing import Dict, Any, Optional

import numpy as np

from models.fields import DriftField, DiffusionField
from models.measures import GridSpec

SCHEMES = ('scharfetter_gummel', 'upwind')


@dataclass
class FpeProblem:
    drift: DriftField
    diffusion: DiffusionField
    grid: GridSpec
    dt: Optional[float] = None  # None: chosen from the stability bound times settings.FPE_SAFETY
    scheme: str = 'upwind'
    boundary: str = 'zero_flux'

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"Unknown flux scheme '{self.scheme}', expected one of {SCHEMES}")
        if self.boundary != 'zero_flux':
            raise ValueError(f"Unsupported boundary '{self.boundary}'")
        if self.drift.dimension != 2 or self.diffusion.dimension != 2:
            raise ValueError("The grid solver is two-dimensional")
        if self.dt is not None and self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            'drift': self.drift.name,
            'diffusion': self.diffusion.name,
            'grid': self.grid.to_dict(),
            'dt': self.dt,
            'scheme': self.scheme,
            'boundary': self.boundary
        }


@dataclass(frozen=True)
class SurfaceQuadrature:
    """Equally spaced nodes on a circle with outward normals (x - center) / radius."""
    center: np.ndarray
    radius: float
    n_nodes: int

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"Quadrature radius must be positive, got {self.radius}")
        if self.n_nodes < 3:
            raise ValueError(f"Need at least 3 quadrature nodes, got {self.n_nodes}")
        object.__setattr__(self, 'center', np.asarray(self.center, dtype=float))

    @property
    def angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_nodes) / self.n_nodes

    @property
    def normals(self) -> np.ndarray:
        a = self.angles
        return np.stack([np.cos(a), np.sin(a)], axis=1)

    @property
    def nodes(self) -> np.ndarray:
        return self.center + self.radius * self.normals

    @property
    def weights(self) -> np.ndarray:
        # periodic trapezoid rule: equal arc lengths
        return np.full(self.n_nodes, 2.0 * np.pi * self.radius / self.n_nodes)

    def refined(self, factor: int = 2) -> 'SurfaceQuadrature':
        return SurfaceQuadrature(self.center, self.radius, self.n_nodes * factor)

    def to_dict(self) -> Dict[str, Any]:
        return {'center': self.center.tolist(), 'radius': self.radius, 'n_nodes': self.n_nodes}
