"""
Grid and empirical-measure models.
"""
from dataclasses import dataclass, asdict
from typing import Dict, Any, Optional, Tuple

import numpy as np

W2_METHODS = ('exact_assignment', 'entropic', 'sliced')


@dataclass(frozen=True)
class GridSpec:
    """Rectangular cell-centred 2-D lattice; cell i spans [x_min + i*hx, x_min + (i+1)*hx]."""
    x_min: float
    x_max: float
    n_x: int
    y_min: float
    y_max: float
    n_y: int

    def __post_init__(self):
        if self.n_x < 2 or self.n_y < 2:
            raise ValueError(f"Grid needs at least 2 cells per axis, got {self.n_x}x{self.n_y}")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError("Grid bounds must satisfy max > min on both axes")

    @property
    def hx(self) -> float:
        return (self.x_max - self.x_min) / self.n_x

    @property
    def hy(self) -> float:
        return (self.y_max - self.y_min) / self.n_y

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.n_x, self.n_y)

    def centers_x(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_x) + 0.5) * self.hx

    def centers_y(self) -> np.ndarray:
        return self.y_min + (np.arange(self.n_y) + 0.5) * self.hy

    def edges_x(self) -> np.ndarray:
        return self.x_min + np.arange(self.n_x + 1) * self.hx

    def edges_y(self) -> np.ndarray:
        return self.y_min + np.arange(self.n_y + 1) * self.hy

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        """Cell-centre coordinates, each of shape (n_x, n_y)."""
        return np.meshgrid(self.centers_x(), self.centers_y(), indexing='ij')

    def points(self) -> np.ndarray:
        """Cell centres stacked as (n_x, n_y, 2)."""
        xx, yy = self.mesh()
        return np.stack([xx, yy], axis=-1)

    def contains(self, x: np.ndarray) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(self.x_min <= x[0] <= self.x_max and self.y_min <= x[1] <= self.y_max)

    def contains_disk(self, center: np.ndarray, r: float) -> bool:
        c = np.asarray(center, dtype=float)
        return bool(c[0] - r >= self.x_min and c[0] + r <= self.x_max
                    and c[1] - r >= self.y_min and c[1] + r <= self.y_max)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class GridDensity:
    """Probability density sampled at cell centres."""
    grid: GridSpec
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"Density shape {self.values.shape} does not match grid {self.grid.shape}")

    @property
    def cell_area(self) -> float:
        return self.grid.cell_area

    def total_mass(self) -> float:
        return float(self.values.sum() * self.cell_area)

    def normalized(self) -> 'GridDensity':
        mass = self.total_mass()
        if mass <= 0:
            raise ValueError("Cannot normalize a density with non-positive mass")
        return GridDensity(self.grid, self.values / mass, self.time)

    def mean(self) -> np.ndarray:
        xx, yy = self.grid.mesh()
        w = self.values * self.cell_area
        m = w.sum()
        return np.array([(w * xx).sum() / m, (w * yy).sum() / m])

    def covariance(self) -> np.ndarray:
        xx, yy = self.grid.mesh()
        w = self.values * self.cell_area
        w = w / w.sum()
        mx, my = (w * xx).sum(), (w * yy).sum()
        dx, dy = xx - mx, yy - my
        cxy = (w * dx * dy).sum()
        return np.array([[(w * dx * dx).sum(), cxy], [cxy, (w * dy * dy).sum()]])

    def local_maxima(self, min_mass: float = 1e-4) -> np.ndarray:
        """Indices (k, 2) of cells strictly larger than their 8 neighbours."""
        v = self.values
        padded = np.pad(v, 1, mode='constant', constant_values=-np.inf)
        is_max = np.ones_like(v, dtype=bool)
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                if di == 0 and dj == 0:
                    continue
                neighbour = padded[1 + di:1 + di + v.shape[0], 1 + dj:1 + dj + v.shape[1]]
                is_max &= v > neighbour
        is_max &= v * self.cell_area >= min_mass
        return np.argwhere(is_max)

    def same_grid(self, other: 'GridDensity') -> bool:
        return self.grid == other.grid

    def to_dict(self) -> Dict[str, Any]:
        return {
            'grid': self.grid.to_dict(),
            'time': self.time,
            'mass': self.total_mass(),
            'min_value': float(self.values.min()),
            'max_value': float(self.values.max())
        }


@dataclass(frozen=True)
class WassersteinEstimate:
    value: float
    method: str
    n_points_used: int
    regularization: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class ConvergenceResult:
    """Output of the snapshot-difference monitor."""
    converged_at: Optional[float]
    norm_series: np.ndarray
    times: np.ndarray

    @property
    def converged(self) -> bool:
        return self.converged_at is not None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'converged_at': self.converged_at,
            'n_snapshots': len(self.times),
            'final_norm': float(self.norm_series[-1]) if len(self.norm_series) else None
        }
