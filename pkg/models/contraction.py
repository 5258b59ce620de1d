"""
Contraction-analysis result models.
"""
from dataclasses import dataclass, field, asdict
from typing import Dict, Any, Optional, Tuple

import numpy as np

GLOBALLY_CONTRACTING = 'globally_contracting'
BR_CONTRACTING = 'br_contracting'
UNCLASSIFIED = 'unclassified'


@dataclass(frozen=True)
class Box:
    """Axis-aligned sampling region."""
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]

    def __post_init__(self):
        if len(self.lower) != len(self.upper) or len(self.lower) == 0:
            raise ValueError("Box bounds must be non-empty and of equal length")
        if any(hi <= lo for lo, hi in zip(self.lower, self.upper)):
            raise ValueError(f"Degenerate box: lower={self.lower}, upper={self.upper}")

    @classmethod
    def symmetric(cls, half_width: float, dimension: int) -> 'Box':
        return cls(tuple([-half_width] * dimension), tuple([half_width] * dimension))

    @property
    def dimension(self) -> int:
        return len(self.lower)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(n, self.dimension))

    def to_dict(self) -> Dict[str, Any]:
        return {'lower': list(self.lower), 'upper': list(self.upper)}


@dataclass
class ContractionReport:
    """Sampled sup of (f(x)-f(y), x-y)/||x-y||^2 and the resulting classification."""
    global_rate_estimate: float
    region: Box
    n_pairs: int
    classification: str
    contraction_rate: Optional[float] = None
    expansion_rate: Optional[float] = None
    expansion_radius: Optional[float] = None
    rate_inside: Optional[float] = None
    rate_outside: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'global_rate_estimate': self.global_rate_estimate,
            'region': self.region.to_dict(),
            'n_pairs': self.n_pairs,
            'classification': self.classification,
            'contraction_rate': self.contraction_rate,
            'expansion_rate': self.expansion_rate,
            'expansion_radius': self.expansion_radius,
            'rate_inside': self.rate_inside,
            'rate_outside': self.rate_outside
        }


@dataclass(frozen=True)
class DiffusionConstantsEstimate:
    L_G_squared_convention: float
    L_G_plain: float
    frobenius_sup: float
    sublinearity: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class EquilibriumRecord:
    x_star: np.ndarray
    stability: str  # 'stable' | 'unstable'
    jacobian_spectrum_abscissa: float
    residual: float
    r_star: Optional[float] = None
    c_star: Optional[float] = None

    @property
    def is_stable(self) -> bool:
        return self.stability == 'stable'

    def to_dict(self) -> Dict[str, Any]:
        return {
            'x_star': np.asarray(self.x_star).tolist(),
            'stability': self.stability,
            'jacobian_spectrum_abscissa': self.jacobian_spectrum_abscissa,
            'residual': self.residual,
            'r_star': self.r_star,
            'c_star': self.c_star
        }


@dataclass
class LocalContractionBall:
    """Largest sampled radius on which pairs around x_star contract."""
    x_star: np.ndarray
    r_star: Optional[float]
    c_star: Optional[float]
    radii: np.ndarray = field(default_factory=lambda: np.empty(0))
    rates: np.ndarray = field(default_factory=lambda: np.empty(0))  # running sup per radius

    @property
    def locally_contracting(self) -> bool:
        return self.r_star is not None

    def __iter__(self):
        yield self.r_star
        yield self.c_star

    def to_dict(self) -> Dict[str, Any]:
        return {
            'x_star': np.asarray(self.x_star).tolist(),
            'locally_contracting': self.locally_contracting,
            'r_star': self.r_star,
            'c_star': self.c_star
        }
