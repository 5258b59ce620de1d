"""
Drift, diffusion and test-function models.

All field callables accept batched states: ``x`` of shape ``(..., d)`` maps to
``(..., d)`` for drifts and ``(..., d, d)`` for diffusions.
"""
from dataclasses import dataclass, field, asdict
from typing import Callable, Dict, Any, Optional

import numpy as np

import config.settings as settings

VectorFn = Callable[[float, np.ndarray], np.ndarray]
ScalarFn = Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class DriftConstants:
    """Declared regularity constants of a drift (all optional certificates)."""
    one_sided_lipschitz: Optional[float] = None
    sublinearity: Optional[float] = None
    contraction_rate: Optional[float] = None
    expansion_rate: Optional[float] = None
    expansion_radius: Optional[float] = None

    def claims_global_contraction(self) -> bool:
        return self.contraction_rate is not None and self.expansion_rate is None and self.expansion_radius is None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class DiffusionConstants:
    """Declared constants of a diffusion; ``squared_lipschitz`` bounds ||dG||_F^2 / ||dx||^2."""
    squared_lipschitz: Optional[float] = None
    sublinearity: Optional[float] = None
    frobenius_sup: Optional[float] = None
    isotropic_amplitude: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class DriftField:
    """Evaluable drift f(t, x)."""
    name: str
    dimension: int
    func: VectorFn
    constants: DriftConstants = field(default_factory=DriftConstants)
    autonomous: bool = True
    params: Dict[str, Any] = field(default_factory=dict)
    potential: Optional[ScalarFn] = None  # E with f = -grad E, for gradient systems
    jacobian: Optional[Callable[[float, np.ndarray], np.ndarray]] = None

    def eval(self, t: float, x: np.ndarray) -> np.ndarray:
        return self.func(t, np.asarray(x, dtype=float))

    def __call__(self, t: float, x: np.ndarray) -> np.ndarray:
        return self.eval(t, x)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'dimension': self.dimension,
            'autonomous': self.autonomous,
            'params': dict(self.params),
            'constants': self.constants.to_dict()
        }


@dataclass(frozen=True)
class DiffusionField:
    """Evaluable diffusion G(t, x), a d x d matrix per state."""
    name: str
    dimension: int
    func: VectorFn
    constants: DiffusionConstants = field(default_factory=DiffusionConstants)
    params: Dict[str, Any] = field(default_factory=dict)

    @property
    def isotropic_amplitude(self) -> Optional[float]:
        return self.constants.isotropic_amplitude

    def eval(self, t: float, x: np.ndarray) -> np.ndarray:
        return self.func(t, np.asarray(x, dtype=float))

    def __call__(self, t: float, x: np.ndarray) -> np.ndarray:
        return self.eval(t, x)

    def tensor(self, t: float, x: np.ndarray) -> np.ndarray:
        """D = G G^T."""
        g = self.eval(t, x)
        return np.einsum('...ij,...kj->...ik', g, g)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'dimension': self.dimension,
            'params': dict(self.params),
            'constants': self.constants.to_dict()
        }


@dataclass(frozen=True)
class TestFunction:
    """Test function h(t, x) for the infinitesimal generator.

    Missing hessians are central differences of the gradient; a missing time
    derivative means h is autonomous.
    """
    __test__ = False  # keep pytest from collecting this class

    func: ScalarFn
    gradient: VectorFn
    hessian: Optional[Callable[[float, np.ndarray], np.ndarray]] = None
    time_derivative: Optional[ScalarFn] = None
    fd_step: float = settings.HESSIAN_FD_STEP

    def eval(self, t: float, x: np.ndarray) -> float:
        return self.func(t, np.asarray(x, dtype=float))

    def grad(self, t: float, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.gradient(t, np.asarray(x, dtype=float)), dtype=float)

    def hess(self, t: float, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.hessian is not None:
            return np.asarray(self.hessian(t, x), dtype=float)
        d = x.shape[-1]
        h = np.zeros((d, d))
        for j in range(d):
            e = np.zeros(d)
            e[j] = self.fd_step
            h[:, j] = (self.grad(t, x + e) - self.grad(t, x - e)) / (2 * self.fd_step)
        return 0.5 * (h + h.T)

    def dt(self, t: float, x: np.ndarray) -> float:
        if self.time_derivative is None:
            return 0.0
        return float(self.time_derivative(t, np.asarray(x, dtype=float)))


def squared_norm() -> TestFunction:
    """The canonical h(x) = ||x||^2."""
    return TestFunction(
        func=lambda t, x: float(np.dot(x, x)),
        gradient=lambda t, x: 2.0 * x,
        hessian=lambda t, x: 2.0 * np.eye(x.shape[-1])
    )
