"""
Field catalog and infinitesimal-generator evaluation.
"""
import logging
from typing import Dict, Any, Tuple, Callable, Iterable

import numpy as np

from models.fields import (
    DriftField, DiffusionField, DriftConstants, DiffusionConstants, TestFunction
)
from models.hopfield import HopfieldModel, GLOBALLY_CONTRACTING, MULTISTABLE
from services.exceptions import ValidationError

logger = logging.getLogger(__name__)

# name -> (kind, {param: default}); a default of None marks a required parameter
CATALOG: Dict[str, Tuple[str, Dict[str, Any]]] = {
    'ou_linear': ('drift', {'c': None, 'd': 2}),
    'linear_drift': ('drift', {'A': None}),
    'zero_drift': ('drift', {'d': 2}),
    'double_well_gradient': ('drift', {'d': 2, 'tilt': 0.0, 'stiffness': 1.0}),
    'hopfield_global': ('drift', {'beta': 2.0, 'u': [0.2, 0.25], 'connectivity_scale': 0.5}),
    'hopfield_multistable': ('drift', {'beta': 2.0, 'u': [1.0, 3.0], 'connectivity_scale': 0.5}),
    'paper_inhomogeneous_diffusion': ('diffusion', {'a': 0.4}),
    'constant_isotropic_diffusion': ('diffusion', {'omega': None, 'd': 2}),
    'perturbed_isotropic_diffusion': ('diffusion', {'omega': None, 'eps': None}),
}

# alternate name -> catalog name
ALIASES: Dict[str, str] = {
    'sinusoidal_diffusion': 'paper_inhomogeneous_diffusion',
}


class FieldService:
    """Service building catalog fields and evaluating the generator A h = dh/dt + grad h . f + 1/2 Tr(G hess h G^T)."""

    def catalog_names(self) -> Iterable[str]:
        return tuple(CATALOG)

    @staticmethod
    def canonical_name(name: str) -> str:
        return ALIASES.get(name, name)

    def kind_of(self, name: str) -> str:
        name = self.canonical_name(name)
        if name not in CATALOG:
            raise ValidationError(f"Unknown catalog field '{name}'", key=name)
        return CATALOG[name][0]

    def catalog_field(self, name: str, params: Dict[str, Any]):
        """
        Build a catalog drift or diffusion.

        Args:
            name: Catalog identifier
            params: Parameter map; missing optional keys take their defaults

        Returns:
            DriftField or DiffusionField with analytic constants declared
        """
        name = self.canonical_name(name)
        kind = self.kind_of(name)
        resolved = self._resolve_params(name, params or {})
        builder: Callable = getattr(self, f'_build_{name}')
        try:
            result = builder(**resolved)
        except ValidationError:
            raise
        except (TypeError, ValueError) as e:
            logger.error(f"Error building field '{name}': {e}")
            raise ValidationError(f"Invalid parameters for '{name}': {e}", key=name) from e
        logger.debug(f"Built {kind} '{name}' with params {resolved}")
        return result

    def catalog_pair(self, drift_name: str, drift_params: Dict[str, Any],
                     diffusion_name: str, diffusion_params: Dict[str, Any]) -> Tuple[DriftField, DiffusionField]:
        f = self.catalog_field(drift_name, drift_params)
        G = self.catalog_field(diffusion_name, diffusion_params)
        if not isinstance(f, DriftField):
            raise ValidationError(f"'{drift_name}' is not a drift", key=drift_name)
        if not isinstance(G, DiffusionField):
            raise ValidationError(f"'{diffusion_name}' is not a diffusion", key=diffusion_name)
        if f.dimension != G.dimension:
            raise ValidationError(
                f"Dimension mismatch: drift '{drift_name}' is {f.dimension}-D, diffusion '{diffusion_name}' is {G.dimension}-D",
                key=diffusion_name
            )
        return f, G

    def eval_generator(self, f: DriftField, G: DiffusionField, h: TestFunction, t: float, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.shape[0] != f.dimension or f.dimension != G.dimension:
            raise ValidationError(
                f"Dimension mismatch: state {x.shape}, drift {f.dimension}, diffusion {G.dimension}", key='x'
            )
        g = G.eval(t, x)
        return float(h.dt(t, x) + h.grad(t, x) @ f.eval(t, x) + 0.5 * np.trace(g @ h.hess(t, x) @ g.T))

    def eval_coupled_generator(self, f: DriftField, G: DiffusionField, h: TestFunction,
                               t: float, x: np.ndarray, z: np.ndarray) -> float:
        """
        Generator of h along the parallel-coupled difference process X - Z.

        For h = ||.||^2 this is 2 (f(x) - f(z), x - z) + ||G(x) - G(z)||_F^2.
        """
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        if x.shape != z.shape or x.shape[-1] != f.dimension:
            raise ValidationError(f"Dimension mismatch: x {x.shape}, z {z.shape}, drift {f.dimension}", key='x')
        e = x - z
        dg = G.eval(t, x) - G.eval(t, z)
        df = f.eval(t, x) - f.eval(t, z)
        return float(h.dt(t, e) + h.grad(t, e) @ df + 0.5 * np.trace(dg @ h.hess(t, e) @ dg.T))

    def check_autonomy(self, f: DriftField, n_samples: int = 100, seed: int = 0, half_width: float = 3.0) -> float:
        """Max |f(t, x) - f(0, x)| over random (t, x)."""
        rng = np.random.default_rng(seed)
        x = rng.uniform(-half_width, half_width, size=(n_samples, f.dimension))
        t = rng.uniform(0.0, 100.0, size=n_samples)
        return float(max(np.max(np.abs(f.eval(ti, xi) - f.eval(0.0, xi))) for ti, xi in zip(t, x)))

    def _resolve_params(self, name: str, params: Dict[str, Any]) -> Dict[str, Any]:
        defaults = CATALOG[name][1]
        unknown = sorted(set(params) - set(defaults))
        if unknown:
            raise ValidationError(f"Unknown parameter '{unknown[0]}' for '{name}'", key=unknown[0])
        resolved = {}
        for key, default in defaults.items():
            if key in params:
                resolved[key] = params[key]
            elif default is None:
                raise ValidationError(f"Missing required parameter '{key}' for '{name}'", key=key)
            else:
                resolved[key] = default
        return resolved

    @staticmethod
    def _positive(key: str, value: Any) -> float:
        try:
            v = float(value)
        except (TypeError, ValueError):
            raise ValidationError(f"Parameter '{key}' must be a number, got {value!r}", key=key)
        if not np.isfinite(v) or v <= 0:
            raise ValidationError(f"Parameter '{key}' must be positive, got {value}", key=key)
        return v

    @staticmethod
    def _dimension(value: Any) -> int:
        if int(value) != value or int(value) < 1:
            raise ValidationError(f"Parameter 'd' must be a positive integer, got {value}", key='d')
        return int(value)

    # Drifts

    def _build_ou_linear(self, c, d) -> DriftField:
        c = self._positive('c', c)
        d = self._dimension(d)
        return DriftField(
            name='ou_linear',
            dimension=d,
            func=lambda t, x: -c * x,
            constants=DriftConstants(one_sided_lipschitz=c, sublinearity=c * c, contraction_rate=c),
            params={'c': c, 'd': d},
            potential=lambda t, x: 0.5 * c * np.sum(x * x, axis=-1),
            jacobian=lambda t, x: -c * np.eye(d)
        )

    def _build_linear_drift(self, A) -> DriftField:
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValidationError(f"Parameter 'A' must be a square matrix, got shape {A.shape}", key='A')
        sym_max = float(np.max(np.linalg.eigvalsh(0.5 * (A + A.T))))
        norm = float(np.linalg.norm(A, 2))
        return DriftField(
            name='linear_drift',
            dimension=A.shape[0],
            func=lambda t, x: x @ A.T,
            constants=DriftConstants(
                one_sided_lipschitz=norm,
                sublinearity=norm ** 2,
                contraction_rate=-sym_max if sym_max < 0 else None,
                expansion_rate=sym_max if sym_max >= 0 else None
            ),
            params={'A': A.tolist()},
            jacobian=lambda t, x: A.copy()
        )

    def _build_zero_drift(self, d) -> DriftField:
        d = self._dimension(d)
        return DriftField(
            name='zero_drift',
            dimension=d,
            func=lambda t, x: np.zeros_like(x),
            constants=DriftConstants(one_sided_lipschitz=0.0, sublinearity=0.0),
            params={'d': d},
            jacobian=lambda t, x: np.zeros((d, d))
        )

    def _build_double_well_gradient(self, d, tilt, stiffness) -> DriftField:
        """E(x) = (x_1^2 - 1)^2 / 4 + tilt * x_1 + stiffness * |x_{2:}|^2 / 2."""
        d = self._dimension(d)
        tilt = float(tilt)
        k = self._positive('stiffness', stiffness)

        def func(t, x):
            out = -k * x
            out[..., 0] = -(x[..., 0] ** 3 - x[..., 0]) - tilt
            return out

        def potential(t, x):
            x1 = x[..., 0]
            return 0.25 * (x1 ** 2 - 1.0) ** 2 + tilt * x1 + 0.5 * k * np.sum(x[..., 1:] ** 2, axis=-1)

        def jacobian(t, x):
            jac = -k * np.eye(d)
            jac[0, 0] = 1.0 - 3.0 * x[0] ** 2
            return jac

        return DriftField(
            name='double_well_gradient',
            dimension=d,
            func=func,
            # f' = 1 - 3 x_1^2 peaks at +1; pairs with |x_1|, |y_1| > 1 contract at rate >= r^2 - 1
            constants=DriftConstants(expansion_rate=1.0, expansion_radius=1.0),
            params={'d': d, 'tilt': tilt, 'stiffness': k},
            potential=potential,
            jacobian=jacobian
        )

    def _hopfield(self, name: str, beta, u, connectivity_scale, regime: str) -> DriftField:
        beta = self._positive('beta', beta)
        u = np.asarray(u, dtype=float)
        if u.shape != (2,):
            raise ValidationError(f"Parameter 'u' must have two entries, got {u.tolist()}", key='u')
        if np.any(u < 0):
            raise ValidationError(f"Input 'u' must be non-negative, got {u.tolist()}", key='u')
        scale = self._positive('connectivity_scale', connectivity_scale)
        model = HopfieldModel(beta=beta, u=u, connectivity_scale=scale)
        if model.regime != regime:
            raise ValidationError(
                f"'{name}' needs the {regime} regime but beta={beta}, u={u.tolist()} is {model.regime}", key='u'
            )
        gain = beta * float(np.max(np.abs(np.linalg.eigvalsh(model.W))))
        if regime == GLOBALLY_CONTRACTING:
            constants = DriftConstants(one_sided_lipschitz=1.0 + gain, contraction_rate=1.0 - gain)
        else:
            constants = DriftConstants(one_sided_lipschitz=1.0 + gain, expansion_rate=gain - 1.0)
        return DriftField(
            name=name,
            dimension=2,
            func=lambda t, x: model.drift(x),
            constants=constants,
            params={'beta': beta, 'u': u.tolist(), 'connectivity_scale': scale},
            jacobian=lambda t, x: model.jacobian(x)
        )

    def _build_hopfield_global(self, beta, u, connectivity_scale) -> DriftField:
        return self._hopfield('hopfield_global', beta, u, connectivity_scale, GLOBALLY_CONTRACTING)

    def _build_hopfield_multistable(self, beta, u, connectivity_scale) -> DriftField:
        return self._hopfield('hopfield_multistable', beta, u, connectivity_scale, MULTISTABLE)

    # Diffusions

    def _build_paper_inhomogeneous_diffusion(self, a) -> DiffusionField:
        """G(x) = a diag(sin x_1, cos x_2)."""
        a = self._positive('a', a)

        def func(t, x):
            g = np.zeros(x.shape[:-1] + (2, 2))
            g[..., 0, 0] = a * np.sin(x[..., 0])
            g[..., 1, 1] = a * np.cos(x[..., 1])
            return g

        return DiffusionField(
            name='paper_inhomogeneous_diffusion',
            dimension=2,
            func=func,
            constants=DiffusionConstants(
                squared_lipschitz=a * a,
                sublinearity=2.0 * a * a,
                frobenius_sup=a * np.sqrt(2.0)
            ),
            params={'a': a}
        )

    def _build_constant_isotropic_diffusion(self, omega, d) -> DiffusionField:
        omega = self._positive('omega', omega)
        d = self._dimension(d)
        eye = omega * np.eye(d)
        return DiffusionField(
            name='constant_isotropic_diffusion',
            dimension=d,
            func=lambda t, x: np.broadcast_to(eye, x.shape[:-1] + (d, d)).copy(),
            constants=DiffusionConstants(
                squared_lipschitz=0.0,
                sublinearity=d * omega * omega,
                frobenius_sup=omega * np.sqrt(d),
                isotropic_amplitude=omega
            ),
            params={'omega': omega, 'd': d}
        )

    def _build_perturbed_isotropic_diffusion(self, omega, eps) -> DiffusionField:
        """G(x) = omega I + eps diag(sin x_1, cos x_2)."""
        omega = self._positive('omega', omega)
        eps = float(eps)

        def func(t, x):
            g = np.zeros(x.shape[:-1] + (2, 2))
            g[..., 0, 0] = omega + eps * np.sin(x[..., 0])
            g[..., 1, 1] = omega + eps * np.cos(x[..., 1])
            return g

        return DiffusionField(
            name='perturbed_isotropic_diffusion',
            dimension=2,
            func=func,
            constants=DiffusionConstants(
                squared_lipschitz=eps * eps,
                frobenius_sup=np.sqrt(2.0) * (omega + abs(eps))
            ),
            params={'omega': omega, 'eps': eps}
        )
