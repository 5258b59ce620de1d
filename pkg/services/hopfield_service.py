"""
Input-driven Hopfield system: construction, energy, metric and the hypothesis
checks of the mass-concentration result.
"""
import logging
from typing import Dict, Any, List, Optional, Sequence

import numpy as np

import config.settings as settings
from models.contraction import Box
from models.fields import DriftField
from models.hopfield import HopfieldModel, EnergyLandscape, GLOBALLY_CONTRACTING
from models.measures import GridSpec, GridDensity
from services.exceptions import ValidationError, ConvergenceError, DomainError
from services.field_service import FieldService

logger = logging.getLogger(__name__)


class HopfieldService:
    """Service for the two-neuron Hopfield model and its energy landscape."""

    def __init__(self, field_service: FieldService):
        self.field_service = field_service

    def build_model(self, u: Sequence[float], beta: float,
                    connectivity_scale: float = settings.HOPFIELD_CONNECTIVITY_SCALE) -> HopfieldModel:
        u = np.asarray(u, dtype=float)
        if u.shape != (2,):
            raise ValidationError(f"u must have two entries, got {u.tolist()}", key='u')
        if np.any(u < 0):
            raise ValidationError(f"u must be non-negative, got {u.tolist()}", key='u')
        if not np.isfinite(beta) or beta <= 0:
            raise ValidationError(f"beta must be finite and positive, got {beta}", key='beta')
        model = HopfieldModel(beta=float(beta), u=u, connectivity_scale=connectivity_scale)
        logger.info(f"Hopfield model beta={beta}, u={u.tolist()}: {model.regime}")
        return model

    def landscape(self, model: HopfieldModel) -> EnergyLandscape:
        return EnergyLandscape(model)

    def as_drift(self, model: HopfieldModel) -> DriftField:
        name = 'hopfield_global' if model.regime == GLOBALLY_CONTRACTING else 'hopfield_multistable'
        return self.field_service.catalog_field(name, {
            'beta': model.beta, 'u': model.u.tolist(), 'connectivity_scale': model.connectivity_scale
        })

    def energy(self, l: EnergyLandscape, x: np.ndarray) -> float:
        return float(l.energy(np.asarray(x, dtype=float)))

    def energy_grid(self, l: EnergyLandscape, grid: GridSpec) -> np.ndarray:
        """E at every cell centre, shape (n_x, n_y)."""
        return l.energy(grid.points())

    def drift_p_consistency(self, l: EnergyLandscape, x: np.ndarray) -> Dict[str, Any]:
        """Compare -x + W Phi(x) with -P(x) grad E(x)."""
        x = np.asarray(x, dtype=float)
        drift = l.model.drift(x)
        reconstructed = l.reconstructed_drift(x)
        return {
            'drift': drift,
            'reconstructed': reconstructed,
            'residual': float(np.max(np.linalg.norm(np.atleast_2d(drift - reconstructed), axis=-1)))
        }

    def equilibrium_gamma(self, u_i: float, beta: float, tol: float = 1e-12, gain: float = 1.0) -> float:
        """
        Positive fixed point of gamma = gain * u_i * tanh(beta * gamma).

        gain is the eigenvalue of W_u per unit input (2 * connectivity_scale).
        Iterating down from gamma = gain * u_i converges monotonically.
        """
        if u_i < 0 or beta <= 0:
            raise ValidationError(f"Need u_i >= 0 and beta > 0, got u_i={u_i}, beta={beta}", key='u')
        lam = gain * u_i
        if lam * beta <= 1.0:
            return 0.0
        gamma = lam
        for _ in range(settings.GAMMA_MAX_ITER):
            nxt = lam * np.tanh(beta * gamma)
            if abs(nxt - gamma) <= tol:
                return float(nxt)
            gamma = nxt
        logger.error(f"gamma iteration did not converge for u_i={u_i}, beta={beta}")
        raise ConvergenceError(f"gamma fixed point did not converge in {settings.GAMMA_MAX_ITER} iterations",
                               residual=abs(lam * np.tanh(beta * gamma) - gamma))

    def pattern_equilibria(self, model: HopfieldModel) -> List[np.ndarray]:
        """+-gamma_i M^i for every pattern with a non-zero fixed point."""
        gain = 2.0 * model.connectivity_scale
        points = []
        for i in range(2):
            gamma = self.equilibrium_gamma(model.u[i], model.beta, gain=gain)
            if gamma > 0:
                points += [gamma * model.M[:, i], -gamma * model.M[:, i]]
        return points

    def check_thm2_hypotheses(self, l: EnergyLandscape, x_a: np.ndarray, x_b: np.ndarray, r: float,
                              stationary: GridDensity, omega: Optional[float] = None,
                              n_angles: int = 720) -> Dict[str, Any]:
        """
        (I) both balls stay in their centre's orthant; (II) E(z + x_a) <= E(x_b) <= E(z + x_b) < 0
        on the sphere ||z|| = r; (III) normalized residual of grad mu + P grad E mu over the support.

        The omega^2 / 2 scaled variant of (III) is reported when omega is given.
        """
        x_a = np.asarray(x_a, dtype=float)
        x_b = np.asarray(x_b, dtype=float)
        grid = stationary.grid
        for name, c in (('x_a', x_a), ('x_b', x_b)):
            if not grid.contains_disk(c, r):
                raise DomainError(f"Ball around {name}={c.tolist()} with radius {r} overlaps the grid boundary")

        angles = 2.0 * np.pi * np.arange(n_angles) / n_angles
        z = r * np.stack([np.cos(angles), np.sin(angles)], axis=1)
        ring_a, ring_b = x_a + z, x_b + z

        def same_orthant(center, ring):
            return bool(np.all(np.sign(center) != 0) and np.all(np.sign(ring) == np.sign(center)))

        orthant_ok = same_orthant(x_a, ring_a) and same_orthant(x_b, ring_b)
        e_ring_a = l.energy(ring_a)
        e_ring_b = l.energy(ring_b)
        e_b = float(l.energy(x_b))
        energy_order_ok = bool(np.max(e_ring_a) <= e_b <= np.min(e_ring_b) and np.max(e_ring_b) < 0)

        mu = stationary.values
        grad_mu = np.stack(np.gradient(mu, grid.hx, grid.hy), axis=-1)
        pts = grid.points()
        p_grad_e = l.metric(pts) * l.gradient(pts)
        support = mu >= settings.THM2_SUPPORT_FRACTION * mu.max()
        scale = mu.max()
        literal = np.linalg.norm(grad_mu + p_grad_e * mu[..., None], axis=-1)
        result = {
            'orthant_ok': orthant_ok,
            'energy_order_ok': energy_order_ok,
            'iii_residual': float(np.max(literal[support]) / scale),
            'energy_a_ring_max': float(np.max(e_ring_a)),
            'energy_b': e_b,
            'energy_b_ring_min': float(np.min(e_ring_b)),
            'energy_b_ring_max': float(np.max(e_ring_b))
        }
        if omega is not None:
            scaled = np.linalg.norm(0.5 * omega ** 2 * grad_mu + p_grad_e * mu[..., None], axis=-1)
            result['iii_residual_scaled'] = float(np.max(scaled[support]) / scale)
        logger.info(f"Hypotheses at x_a={x_a.tolist()}, x_b={x_b.tolist()}, r={r}: "
                    f"orthant={orthant_ok}, energy_order={energy_order_ok}, iii={result['iii_residual']:.3g}")
        return result

    def certify_metric(self, l: EnergyLandscape, region: Box, n_samples: int, seed: int,
                       fd_step: float = settings.HESSIAN_FD_STEP) -> Dict[str, Any]:
        """
        Sample P(x) = J_x Phi(x)^{-1}: positive, diagonal, and sign(d_i P_ii) = sign(x_i).

        The closed-form derivative is cross-checked against central differences.
        """
        rng = np.random.default_rng(seed)
        x = region.sample(rng, n_samples)
        p = l.metric(x)
        positive = bool(np.all(p > 0))

        # J_x Phi by differences: off-diagonal entries must vanish
        off_diag = 0.0
        for j, e in enumerate(np.eye(2)):
            col = (l.model.activation(x + fd_step * e) - l.model.activation(x - fd_step * e)) / (2.0 * fd_step)
            off_diag = max(off_diag, float(np.max(np.abs(col[:, 1 - j]))))
        diagonal = off_diag == 0.0

        dp = l.metric_derivative(x)
        nonzero = x != 0
        sign_ok = bool(np.all(np.sign(dp[nonzero]) == np.sign(x[nonzero])))
        fd = np.stack([(l.metric(x + fd_step * e)[:, i] - l.metric(x - fd_step * e)[:, i]) / (2.0 * fd_step)
                       for i, e in enumerate(np.eye(2))], axis=1)
        derivative_error = float(np.max(np.abs(fd - dp) / np.maximum(1.0, np.abs(dp))))
        return {
            'positive': positive,
            'diagonal': diagonal,
            'sign_ok': sign_ok,
            'derivative_error': derivative_error,
            'n_samples': n_samples
        }
