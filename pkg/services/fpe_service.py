"""
Explicit finite-volume Fokker-Planck solver on a 2-D cell-centred grid, plus
circle quadratures for boundary functionals.

The equation is d(mu)/dt = -div(J) with J = f mu - 1/2 div(D mu) for diagonal
D = G G^T, and J = 0 on the outer boundary. Every face flux is written as
J = a * mu_left - b * mu_right with a, b >= 0, which makes the update
conservative and positivity preserving for dt <= 1 / (max outflow rate).
"""
import logging
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Union

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.linalg import solve_continuous_lyapunov
from scipy.special import exprel, ndtr

import config.settings as settings
from models.fields import DriftField
from models.fpe import FpeProblem, SurfaceQuadrature
from models.measures import GridSpec, GridDensity
from models.report import SeriesTable
from services.exceptions import (
    StabilityError, SchemeError, ConvergenceError, DomainError, ValidationError
)
from services.measure_service import MeasureService

logger = logging.getLogger(__name__)

GridFunction = Union[GridDensity, np.ndarray, Callable[[np.ndarray], np.ndarray]]


def bernoulli(z: np.ndarray) -> np.ndarray:
    """B(z) = z / (exp(z) - 1), with B(0) = 1."""
    return 1.0 / exprel(z)


@dataclass
class FluxCoefficients:
    ax: np.ndarray  # (n_x - 1, n_y)
    bx: np.ndarray
    ay: np.ndarray  # (n_x, n_y - 1)
    by: np.ndarray
    out_rate: np.ndarray  # (n_x, n_y)
    max_diffusion: float
    max_drift: float


class FokkerPlanckService:
    """Service for the grid Fokker-Planck path."""

    def __init__(self, measure_service: MeasureService):
        self.measure_service = measure_service

    def coefficients(self, p: FpeProblem, t: float = 0.0) -> FluxCoefficients:
        g = p.grid
        xc, yc = g.centers_x(), g.centers_y()
        centres = g.points()
        D = p.diffusion.tensor(t, centres.reshape(-1, 2)).reshape(g.n_x, g.n_y, 2, 2)
        scale = max(float(np.max(np.abs(D))), 1e-300)
        if np.max(np.abs(D[..., 0, 1])) > 1e-12 * scale or np.max(np.abs(D[..., 1, 0])) > 1e-12 * scale:
            raise ValidationError(f"Diffusion '{p.diffusion.name}' has off-diagonal D = G G^T; the grid solver needs diagonal D",
                                  key='diffusion')
        d11, d22 = D[..., 0, 0], D[..., 1, 1]

        fx_faces = np.stack(np.meshgrid(g.edges_x()[1:-1], yc, indexing='ij'), axis=-1)
        fy_faces = np.stack(np.meshgrid(xc, g.edges_y()[1:-1], indexing='ij'), axis=-1)
        vx = p.drift.eval(t, fx_faces.reshape(-1, 2))[:, 0].reshape(g.n_x - 1, g.n_y)
        vy = p.drift.eval(t, fy_faces.reshape(-1, 2))[:, 1].reshape(g.n_x, g.n_y - 1)

        ax, bx = self._face_coefficients(p.scheme, vx, d11[:-1, :], d11[1:, :], g.hx)
        ay, by = self._face_coefficients(p.scheme, vy, d22[:, :-1], d22[:, 1:], g.hy)

        out = np.zeros(g.shape)
        out[:-1, :] += ax / g.hx
        out[1:, :] += bx / g.hx
        out[:, :-1] += ay / g.hy
        out[:, 1:] += by / g.hy
        drift_norm = np.linalg.norm(p.drift.eval(t, centres.reshape(-1, 2)), axis=1)
        return FluxCoefficients(ax, bx, ay, by, out, float(max(d11.max(), d22.max())), float(drift_norm.max()))

    def stability_bound(self, p: FpeProblem, coeffs: Optional[FluxCoefficients] = None) -> float:
        """min(h^2 / (2 max D), h / max ||f||)."""
        coeffs = coeffs or self.coefficients(p)
        h = min(p.grid.hx, p.grid.hy)
        bounds = []
        if coeffs.max_diffusion > 0:
            bounds.append(h * h / (2.0 * coeffs.max_diffusion))
        if coeffs.max_drift > 0:
            bounds.append(h / coeffs.max_drift)
        return min(bounds) if bounds else np.inf

    def choose_dt(self, p: FpeProblem, coeffs: Optional[FluxCoefficients] = None) -> float:
        coeffs = coeffs or self.coefficients(p)
        if p.dt is not None:
            bound = self.stability_bound(p, coeffs)
            if p.dt > bound:
                logger.error(f"dt={p.dt} exceeds the stability bound {bound:.4g}")
                raise StabilityError(f"dt={p.dt} exceeds the stability bound {bound:.4g}", dt=p.dt, bound=bound)
            return p.dt
        positivity = 1.0 / coeffs.out_rate.max() if coeffs.out_rate.max() > 0 else np.inf
        dt = settings.FPE_SAFETY * min(self.stability_bound(p, coeffs), positivity)
        if not np.isfinite(dt):
            raise ValidationError("Cannot choose dt for a problem with zero drift and zero diffusion", key='dt')
        return dt

    def fpe_step(self, p: FpeProblem, density: GridDensity) -> GridDensity:
        """One explicit conservative step; returns a new density (no aliasing of the input)."""
        if density.grid != p.grid:
            raise ValidationError("Density grid differs from the problem grid", key='grid')
        coeffs = self.coefficients(p, density.time)
        dt = self.choose_dt(p, coeffs)
        return GridDensity(p.grid, self._apply(coeffs, density.values, dt, p.grid), density.time + dt)

    def evolve(self, p: FpeProblem, density: GridDensity, duration: float,
               callback: Optional[Callable[[GridDensity, int], None]] = None,
               callback_every: int = 1) -> GridDensity:
        """Step until ``duration`` has elapsed, landing exactly on it."""
        if density.grid != p.grid:
            raise ValidationError("Density grid differs from the problem grid", key='grid')
        coeffs = self.coefficients(p, density.time)
        dt = self.choose_dt(p, coeffs)
        n_steps = max(int(np.ceil(duration / dt - 1e-9)), 0)
        if n_steps == 0:
            return density
        dt = duration / n_steps
        values, t = density.values, density.time
        for k in range(1, n_steps + 1):
            if not p.drift.autonomous:
                coeffs = self.coefficients(p, t)
            values = self._apply(coeffs, values, dt, p.grid)
            t = density.time + k * dt
            if callback is not None and k % callback_every == 0:
                callback(GridDensity(p.grid, values, t), k)
        return GridDensity(p.grid, values, t)

    def solve_stationary(self, p: FpeProblem, density: GridDensity, tol: float = settings.CONVERGENCE_THRESHOLD,
                         max_steps: int = settings.FPE_MAX_STEPS,
                         monitor_interval: float = settings.FPE_MONITOR_INTERVAL,
                         progress: Optional[SeriesTable] = None) -> GridDensity:
        """
        Step from ``density`` until two snapshots ``monitor_interval`` apart differ
        by less than ``tol`` in the cell-area weighted l2 norm.
        """
        if density.grid != p.grid:
            raise ValidationError("Density grid differs from the problem grid", key='grid')
        coeffs = self.coefficients(p, density.time)
        dt = self.choose_dt(p, coeffs)
        per_snapshot = max(1, int(round(monitor_interval / dt)))
        values, t = density.values, density.time
        previous = GridDensity(p.grid, values, t)
        residual = np.inf
        steps = 0
        while steps < max_steps:
            for _ in range(per_snapshot):
                if not p.drift.autonomous:
                    coeffs = self.coefficients(p, t)
                values = self._apply(coeffs, values, dt, p.grid)
                t += dt
            steps += per_snapshot
            current = GridDensity(p.grid, values, t)
            residual = float(self.measure_service.convergence_monitor([previous, current], tol).norm_series[0])
            if progress is not None:
                progress.append(steps, residual)
            logger.debug(f"FPE step {steps}: residual {residual:.3e}")
            if residual < tol:
                logger.info(f"FPE converged after {steps} steps (t={t:.3f}, residual {residual:.3e})")
                return current
            previous = current
        logger.error(f"FPE did not converge in {max_steps} steps, residual {residual:.3e}")
        raise ConvergenceError(f"Stationary solve exceeded {max_steps} steps", residual=residual)

    def initial_density(self, grid: GridSpec, kind: str, center: Sequence[float], scale: float) -> GridDensity:
        """Discretized dirac, gaussian, uniform_disk or uniform_box measure with unit mass."""
        c = np.asarray(center, dtype=float)
        if not grid.contains(c):
            raise DomainError(f"Initial measure center {c.tolist()} lies outside the grid")
        if kind == 'gaussian' and scale > 0:
            px = np.diff(ndtr((grid.edges_x() - c[0]) / scale))
            py = np.diff(ndtr((grid.edges_y() - c[1]) / scale))
            values = np.outer(px, py)
        elif kind in ('uniform_disk', 'uniform_box') and scale > 0:
            pts = grid.points()
            if kind == 'uniform_disk':
                values = (np.linalg.norm(pts - c, axis=-1) <= scale).astype(float)
            else:
                values = np.all(np.abs(pts - c) <= scale, axis=-1).astype(float)
            if values.sum() == 0:
                i, j = self._cell_of(grid, c)
                values[i, j] = 1.0
        elif kind in ('dirac', 'gaussian', 'uniform_disk', 'uniform_box'):
            values = np.zeros(grid.shape)
            i, j = self._cell_of(grid, c)
            values[i, j] = 1.0
        else:
            raise ValidationError(f"Unknown initial measure '{kind}'", key='kind')
        return GridDensity(grid, values / grid.cell_area).normalized()

    def check_coverage(self, p: FpeProblem, points: Sequence[np.ndarray], contraction_rate: Optional[float] = None,
                       radius: float = 0.0) -> bool:
        """
        Every point must sit inside the grid with room for FPE_COVERAGE_SIGMAS stationary
        standard deviations per axis, and for a ball of ``radius`` around it.

        The spread comes from the isotropic rate ``contraction_rate`` when given, else from
        the covariance of the drift linearised at the point (J S + S J^T + G G^T = 0).
        """
        missing = []
        for x in points:
            x = np.asarray(x, dtype=float)
            spread = self.stationary_spread(p, x, contraction_rate)
            margin = np.maximum(settings.FPE_COVERAGE_SIGMAS * spread, radius)
            g = p.grid
            inside = (x[0] - margin[0] >= g.x_min and x[0] + margin[0] <= g.x_max
                      and x[1] - margin[1] >= g.y_min and x[1] + margin[1] <= g.y_max)
            if not inside:
                missing.append((x.tolist(), np.round(margin, 3).tolist()))
        if missing:
            logger.warning(f"Grid does not cover (point, margin) pairs {missing}")
            return False
        return True

    def stationary_spread(self, p: FpeProblem, x: np.ndarray, contraction_rate: Optional[float] = None) -> np.ndarray:
        """Per-axis standard deviation of the local stationary law at x; inf where x is not stable."""
        x = np.asarray(x, dtype=float)
        if contraction_rate is not None:
            coeffs = self.coefficients(p)
            return np.full(2, np.sqrt(coeffs.max_diffusion / (2.0 * max(contraction_rate, 1e-12))))
        J = self._jacobian(p.drift, x)
        if np.max(np.linalg.eigvals(J).real) >= 0:
            return np.full(2, np.inf)
        D = p.diffusion.tensor(0.0, x[None, :])[0]
        cov = solve_continuous_lyapunov(J, -D)
        return np.sqrt(np.clip(np.diag(cov), 0.0, None))

    # Quadrature

    def surface_integral(self, field_on_grid: GridFunction, q: SurfaceQuadrature, integrand_form: str = 'scalar',
                         grid: Optional[GridSpec] = None,
                         pointwise: Optional[Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]] = None) -> float:
        """
        Trapezoidal quadrature over the circle of ``q``.

        ``field_on_grid`` is a GridDensity, a (n_x, n_y) or (n_x, n_y, 2) array on
        ``grid`` (bilinear interpolation), or a callable of the nodes.
        integrand_form: 'scalar', 'flux_against_normal' or 'custom' (pointwise(nodes, normals, values)).
        """
        values = self._values_at_nodes(field_on_grid, q, grid)
        if integrand_form == 'scalar':
            integrand = values
        elif integrand_form == 'flux_against_normal':
            integrand = np.sum(values * q.normals, axis=-1)
        elif integrand_form == 'custom':
            if pointwise is None:
                raise ValidationError("custom integrand needs a pointwise map", key='pointwise')
            integrand = pointwise(q.nodes, q.normals, values)
        else:
            raise ValidationError(f"Unknown integrand form '{integrand_form}'", key='integrand_form')
        return float(np.sum(q.weights * integrand))

    def mass_sink_functional(self, density: GridDensity, f: DriftField, omega: float, q: SurfaceQuadrature) -> float:
        """(1 / r*) oint mu [-(f, x - x*) - (d / 2) omega^2] d sigma, the lemma-substituted form."""
        def integrand(nodes, normals, mu):
            radial = np.sum(f.eval(0.0, nodes) * (nodes - q.center), axis=-1)
            return mu * (-radial - 0.5 * len(q.center) * omega ** 2) / q.radius

        return self.surface_integral(density, q, 'custom', pointwise=integrand)

    def boundary_mass_flux(self, density: GridDensity, f: DriftField, omega: float, q: SurfaceQuadrature) -> float:
        """oint [-mu (f, xi) + 1/2 omega^2 (grad mu, xi)] d sigma, the time derivative of the ball mass."""
        g = density.grid
        grad = np.stack(np.gradient(density.values, g.hx, g.hy), axis=-1)

        def integrand(nodes, normals, mu):
            grad_at = self._values_at_nodes(grad, q, g)
            return -mu * np.sum(f.eval(0.0, nodes) * normals, axis=-1) + 0.5 * omega ** 2 * np.sum(grad_at * normals, axis=-1)

        return self.surface_integral(density, q, 'custom', pointwise=integrand)

    def lemma_tr_two_sided(self, A: Callable[[np.ndarray], np.ndarray], v: Callable[[np.ndarray], np.ndarray],
                           q: SurfaceQuadrature, div_A: Optional[Callable] = None, jac_v: Optional[Callable] = None,
                           fd_step: float = settings.HESSIAN_FD_STEP) -> Dict[str, float]:
        """
        Both sides of oint (div A, v) d sigma = -oint Tr(A (J v)^T) d sigma.

        (div A)_i = sum_j d_j A_ij and (J v)_ij = d_j v_i; missing derivatives are
        central differences. No claim is made that the sides agree.
        """
        nodes = q.nodes
        if div_A is None:
            div_A = lambda x: self._fd_divergence(A, x, fd_step)
        if jac_v is None:
            jac_v = lambda x: self._fd_jacobian(v, x, fd_step)
        lhs = float(np.sum(q.weights * np.sum(div_A(nodes) * v(nodes), axis=-1)))
        rhs = -float(np.sum(q.weights * np.einsum('nij,nij->n', A(nodes), jac_v(nodes))))
        return {'lhs': lhs, 'rhs': rhs, 'gap': abs(lhs - rhs)}

    # Internals

    @staticmethod
    def _face_coefficients(scheme: str, v: np.ndarray, d_left: np.ndarray, d_right: np.ndarray, h: float):
        if scheme == 'upwind':
            a = np.maximum(v, 0.0) + d_left / (2.0 * h)
            b = -np.minimum(v, 0.0) + d_right / (2.0 * h)
            return a, b
        k = 0.25 * (d_left + d_right)
        effective = v - 0.5 * (d_right - d_left) / h
        a = np.maximum(effective, 0.0)
        b = -np.minimum(effective, 0.0)
        diffusive = k > 0
        pe = np.where(diffusive, effective * h / np.where(diffusive, k, 1.0), 0.0)
        kh = np.where(diffusive, k / h, 0.0)
        a = np.where(diffusive, kh * bernoulli(-pe), a)
        b = np.where(diffusive, kh * bernoulli(pe), b)
        return a, b

    @staticmethod
    def _apply(c: FluxCoefficients, mu: np.ndarray, dt: float, grid: GridSpec) -> np.ndarray:
        jx = c.ax * mu[:-1, :] - c.bx * mu[1:, :]
        jy = c.ay * mu[:, :-1] - c.by * mu[:, 1:]
        div = np.zeros_like(mu)
        div[:-1, :] += jx / grid.hx
        div[1:, :] -= jx / grid.hx
        div[:, :-1] += jy / grid.hy
        div[:, 1:] -= jy / grid.hy
        out = mu - dt * div
        lowest = out.min()
        if lowest < -settings.FPE_NEGATIVE_TOL:
            logger.error(f"Negative density {lowest:.3e}")
            raise SchemeError(f"Density went negative ({lowest:.3e}) beyond tolerance")
        return out

    def _values_at_nodes(self, field_on_grid: GridFunction, q: SurfaceQuadrature, grid: Optional[GridSpec]) -> np.ndarray:
        if callable(field_on_grid):
            return np.asarray(field_on_grid(q.nodes), dtype=float)
        if isinstance(field_on_grid, GridDensity):
            grid, values = field_on_grid.grid, field_on_grid.values
        else:
            if grid is None:
                raise ValidationError("Array integrands need their grid", key='grid')
            values = np.asarray(field_on_grid, dtype=float)
        if not grid.contains_disk(q.center, q.radius):
            raise DomainError(f"Circle at {q.center.tolist()} with radius {q.radius} is not inside the grid")
        interp = RegularGridInterpolator((grid.centers_x(), grid.centers_y()), values,
                                         method='linear', bounds_error=False, fill_value=None)
        return interp(q.nodes)

    @staticmethod
    def _cell_of(grid: GridSpec, c: np.ndarray):
        i = min(int((c[0] - grid.x_min) / grid.hx), grid.n_x - 1)
        j = min(int((c[1] - grid.y_min) / grid.hy), grid.n_y - 1)
        return i, j

    @staticmethod
    def _fd_jacobian(v: Callable, x: np.ndarray, step: float) -> np.ndarray:
        d = x.shape[-1]
        cols = [(v(x + step * e) - v(x - step * e)) / (2.0 * step) for e in np.eye(d)]
        return np.stack(cols, axis=-1)

    @staticmethod
    def _fd_divergence(A: Callable, x: np.ndarray, step: float) -> np.ndarray:
        d = x.shape[-1]
        return sum((A(x + step * e)[..., :, j] - A(x - step * e)[..., :, j]) / (2.0 * step)
                   for j, e in enumerate(np.eye(d)))

    def _jacobian(self, f: DriftField, x: np.ndarray) -> np.ndarray:
        if f.jacobian is not None:
            return np.asarray(f.jacobian(0.0, x), dtype=float)
        return self._fd_jacobian(lambda y: f.eval(0.0, y), x, settings.NEWTON_FD_STEP)
