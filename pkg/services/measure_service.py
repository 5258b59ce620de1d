"""
Empirical-measure machinery: grid KDE, 2-Wasserstein distances, convergence
monitoring and ball-mass queries.
"""
import logging
import math
from typing import Sequence, Tuple, Union, Optional

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist
from scipy.special import logsumexp, ndtr

import config.settings as settings
from models.ensemble import ParticleEnsemble
from models.measures import GridSpec, GridDensity, WassersteinEstimate, ConvergenceResult, W2_METHODS
from services.exceptions import ValidationError, SinkhornConvergenceError, DomainError

logger = logging.getLogger(__name__)


class MeasureService:
    """Service for densities and distances between empirical measures."""

    def kde_grid(self, e: ParticleEnsemble, kernel_cov: np.ndarray, grid: GridSpec) -> GridDensity:
        """
        Gaussian KDE on the grid, renormalized to unit mass.

        Diagonal kernels are integrated exactly over each cell (products of
        normal CDF differences); full covariances are evaluated at cell centres.
        """
        raw, _ = self._kde_raw(e, kernel_cov, grid)
        density = GridDensity(grid, raw, e.time)
        if density.total_mass() <= 0:
            raise DomainError("All kernel mass fell outside the grid")
        return density.normalized()

    def kde_escaped_mass(self, e: ParticleEnsemble, kernel_cov: np.ndarray, grid: GridSpec) -> Tuple[float, float]:
        """(grid mass, escaped mass) of the unnormalized estimate; they sum to 1."""
        raw, escaped = self._kde_raw(e, kernel_cov, grid)
        return float(raw.sum() * grid.cell_area), escaped

    def wasserstein2(self, a: ParticleEnsemble, b: ParticleEnsemble, method: str = 'exact_assignment',
                     **options) -> WassersteinEstimate:
        """
        W2 between two empirical measures.

        Options:
            max_points: subsample size for exact_assignment (default EXACT_W2_MAX_POINTS)
            seed: subsampling / projection seed
            regularization: Sinkhorn epsilon (default SINKHORN_REG_FACTOR * median cost)
            max_iter, tol: Sinkhorn iteration cap and marginal tolerance
            n_projections: sliced directions
        """
        if a.dimension != b.dimension:
            raise ValidationError(f"Ensembles differ in dimension: {a.dimension} vs {b.dimension}", key='dimension')
        if method not in W2_METHODS:
            raise ValidationError(f"Unknown W2 method '{method}', expected one of {W2_METHODS}", key='method')
        seed = options.get('seed', 0)
        if method == 'exact_assignment':
            return self._w2_exact(a, b, options.get('max_points', settings.EXACT_W2_MAX_POINTS), seed)
        if method == 'entropic':
            return self._w2_entropic(a, b, options.get('regularization'),
                                     options.get('max_iter', settings.SINKHORN_MAX_ITER),
                                     options.get('tol', settings.SINKHORN_TOL))
        return self._w2_sliced(a, b, options.get('n_projections', settings.SLICED_PROJECTIONS), seed)

    def convergence_monitor(self, history: Sequence[GridDensity],
                            threshold: float = settings.CONVERGENCE_THRESHOLD) -> ConvergenceResult:
        """norm_series[k] = || (values_{k+1} - values_k) * cell_area ||_2."""
        if len(history) < 2:
            raise ValidationError(f"Need at least 2 snapshots, got {len(history)}", key='history')
        first = history[0]
        norms = np.empty(len(history) - 1)
        converged_at: Optional[float] = None
        for k in range(len(history) - 1):
            prev, cur = history[k], history[k + 1]
            if not (prev.same_grid(first) and cur.same_grid(first)):
                raise ValidationError(f"Snapshot {k + 1} is on a different grid", key='history')
            norms[k] = np.linalg.norm((cur.values - prev.values) * first.cell_area)
            if converged_at is None and norms[k] < threshold:
                converged_at = cur.time
        return ConvergenceResult(converged_at=converged_at, norm_series=norms,
                                 times=np.array([h.time for h in history[1:]]))

    def mass_in_ball(self, m: Union[GridDensity, ParticleEnsemble], center: Sequence[float], r: float) -> float:
        """Grid: sum over cells whose centres lie in the ball. Ensemble: weighted fraction inside."""
        if r <= 0:
            raise ValidationError(f"Ball radius must be positive, got {r}", key='r')
        center = np.asarray(center, dtype=float)
        if isinstance(m, ParticleEnsemble):
            inside = np.linalg.norm(m.particles - center, axis=1) <= r
            return float(np.sum(m.normalized_weights()[inside]))
        g = m.grid
        nearest = np.clip(center, [g.x_min, g.y_min], [g.x_max, g.y_max])
        if np.linalg.norm(nearest - center) > r:
            logger.warning(f"Ball at {center.tolist()} with radius {r} lies entirely outside the grid")
            return 0.0
        inside = np.linalg.norm(g.points() - center, axis=-1) <= r
        return float(min(np.sum(m.values[inside]) * g.cell_area, 1.0))

    # KDE

    def _kde_raw(self, e: ParticleEnsemble, kernel_cov: np.ndarray, grid: GridSpec) -> Tuple[np.ndarray, float]:
        if e.dimension != 2:
            raise ValidationError(f"Grid KDE is two-dimensional, ensemble is {e.dimension}-D", key='dimension')
        cov = np.asarray(kernel_cov, dtype=float)
        if cov.shape != (2, 2) or not np.allclose(cov, cov.T):
            raise ValidationError("kernel_cov must be a symmetric 2x2 matrix", key='kernel_cov')
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise ValidationError("kernel_cov must be positive definite", key='kernel_cov')
        w = e.normalized_weights()
        p = e.particles
        sigma = np.sqrt(np.diag(cov))

        if cov[0, 1] == 0.0:
            px = self._cell_probabilities(p[:, 0], grid.edges_x(), sigma[0])
            py = self._cell_probabilities(p[:, 1], grid.edges_y(), sigma[1])
            raw = px.T @ (w[:, None] * py) / grid.cell_area
        else:
            inv = np.linalg.inv(cov)
            norm = 1.0 / (2.0 * np.pi * np.prod(np.diag(chol)))
            pts = grid.points().reshape(-1, 2)
            raw = np.zeros(len(pts))
            for start in range(0, len(p), 512):
                diff = pts[None, :, :] - p[start:start + 512, None, :]
                quad = np.einsum('npi,ij,npj->np', diff, inv, diff)
                raw += w[start:start + 512] @ (norm * np.exp(-0.5 * quad))
            raw = raw.reshape(grid.shape)

        escaped = 1.0 - float(raw.sum() * grid.cell_area)
        outside = np.maximum.reduce([
            (grid.x_min - p[:, 0]) / sigma[0], (p[:, 0] - grid.x_max) / sigma[0],
            (grid.y_min - p[:, 1]) / sigma[1], (p[:, 1] - grid.y_max) / sigma[1]
        ])
        n_far = int(np.sum(outside > settings.KDE_ESCAPE_SIGMAS))
        if n_far:
            logger.warning(
                f"{n_far} particles lie more than {settings.KDE_ESCAPE_SIGMAS} kernel std outside the grid; "
                f"escaped mass {escaped:.3g}"
            )
        return raw, escaped

    @staticmethod
    def _cell_probabilities(coords: np.ndarray, edges: np.ndarray, sigma: float) -> np.ndarray:
        """(N, n_cells) probability each 1-D kernel assigns to each cell."""
        cdf = ndtr((edges[None, :] - coords[:, None]) / sigma)
        return np.diff(cdf, axis=1)

    # Wasserstein

    def _w2_exact(self, a: ParticleEnsemble, b: ParticleEnsemble, max_points: int, seed: int) -> WassersteinEstimate:
        if a.weights is not None or b.weights is not None:
            raise ValidationError("exact_assignment needs unweighted ensembles", key='weights')
        n = min(a.size, b.size, int(max_points))
        pa, pb = a.particles, b.particles
        rng = np.random.default_rng(seed)
        if a.size > n:
            pa = pa[np.sort(rng.choice(a.size, n, replace=False))]
        if b.size > n:
            pb = pb[np.sort(rng.choice(b.size, n, replace=False))]
        cost = cdist(pa, pb, 'sqeuclidean')
        rows, cols = linear_sum_assignment(cost)
        value = math.sqrt(math.fsum(cost[rows, cols]) / n)
        return WassersteinEstimate(value=value, method='exact_assignment', n_points_used=n)

    def _w2_entropic(self, a: ParticleEnsemble, b: ParticleEnsemble, regularization: Optional[float],
                     max_iter: int, tol: float) -> WassersteinEstimate:
        """Log-domain Sinkhorn; the reported value is sqrt(<P, C>) of the regularized plan."""
        cost = cdist(a.particles, b.particles, 'sqeuclidean')
        eps = regularization if regularization is not None else settings.SINKHORN_REG_FACTOR * float(np.median(cost))
        if eps <= 0:
            eps = settings.SINKHORN_REG_FACTOR
        log_a = np.log(a.normalized_weights())
        log_b = np.log(b.normalized_weights())
        f = np.zeros(a.size)
        g = np.zeros(b.size)
        residual = np.inf
        for it in range(1, max_iter + 1):
            f = -eps * logsumexp((g[None, :] - cost) / eps + log_b[None, :], axis=1)
            g = -eps * logsumexp((f[:, None] - cost) / eps + log_a[:, None], axis=0)
            if it % 10 == 0 or it == max_iter:
                log_plan = (f[:, None] + g[None, :] - cost) / eps + log_a[:, None] + log_b[None, :]
                residual = float(np.sum(np.abs(np.exp(logsumexp(log_plan, axis=1)) - np.exp(log_a))))
                if residual < tol:
                    plan = np.exp(log_plan)
                    value = math.sqrt(max(float(np.sum(plan * cost)), 0.0))
                    logger.debug(f"Sinkhorn converged in {it} iterations (eps={eps:.3g})")
                    return WassersteinEstimate(value=value, method='entropic',
                                               n_points_used=max(a.size, b.size), regularization=eps)
        logger.error(f"Sinkhorn hit {max_iter} iterations with marginal residual {residual:.3g}")
        raise SinkhornConvergenceError(f"Sinkhorn did not converge in {max_iter} iterations", residual=residual)

    def _w2_sliced(self, a: ParticleEnsemble, b: ParticleEnsemble, n_projections: int, seed: int) -> WassersteinEstimate:
        """Mean 1-D W2^2 over random directions, scaled by d so a translation returns its length."""
        n = min(a.size, b.size)
        rng = np.random.default_rng(seed)
        pa = a.particles if a.size == n else a.particles[rng.choice(a.size, n, replace=False)]
        pb = b.particles if b.size == n else b.particles[rng.choice(b.size, n, replace=False)]
        theta = rng.standard_normal((n_projections, a.dimension))
        theta /= np.linalg.norm(theta, axis=1, keepdims=True)
        proj_a = np.sort(pa @ theta.T, axis=0)
        proj_b = np.sort(pb @ theta.T, axis=0)
        value = math.sqrt(a.dimension * float(np.mean((proj_a - proj_b) ** 2)))
        return WassersteinEstimate(value=value, method='sliced', n_points_used=n)
