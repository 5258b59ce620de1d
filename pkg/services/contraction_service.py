"""
Sampled estimation of the regularity constants the convergence results consume.

All rates use the squared form (f(x) - f(y), x - y) <= -c ||x - y||^2.
"""
import logging
from typing import List, Optional, Tuple, Dict

import numpy as np

import config.settings as settings
from models.contraction import (
    Box, ContractionReport, DiffusionConstantsEstimate, EquilibriumRecord, LocalContractionBall,
    GLOBALLY_CONTRACTING, BR_CONTRACTING, UNCLASSIFIED
)
from models.fields import DriftField, DiffusionField
from services.exceptions import ValidationError

logger = logging.getLogger(__name__)


class ContractionService:
    """Service for contraction rates, diffusion constants and equilibria."""

    def __init__(self, perturbation_scales=settings.PERTURBATION_SCALES, min_pairs: int = settings.MIN_PAIRS):
        self.perturbation_scales = tuple(perturbation_scales)
        self.min_pairs = min_pairs

    def estimate_one_sided_rate(self, f: DriftField, region: Box, n_pairs: int, seed: int,
                                exclusion_ball: Optional[Tuple[np.ndarray, float]] = None) -> ContractionReport:
        """
        Sup of (f(x) - f(y), x - y) / ||x - y||^2 over uniform, perturbation and
        Jacobian-aligned pairs, split inside/outside ``exclusion_ball`` when given.
        """
        self._check_sampling(region, n_pairs, f.dimension)
        rng = np.random.default_rng(seed)
        x, y = self._sample_pairs(rng, region, n_pairs)
        xa, ya = self._aligned_pairs(f, region, rng, max(n_pairs // 4, 10))
        x = np.concatenate([x, xa])
        y = np.concatenate([y, ya])
        rates = self.pair_rates(f, x, y)
        sup = float(np.max(rates))

        report = ContractionReport(global_rate_estimate=sup, region=region, n_pairs=len(rates),
                                   classification=UNCLASSIFIED)
        if exclusion_ball is not None:
            center, r = np.asarray(exclusion_ball[0], dtype=float), float(exclusion_ball[1])
            outside = (np.linalg.norm(x - center, axis=1) > r) & (np.linalg.norm(y - center, axis=1) > r)
            report.rate_outside = float(np.max(rates[outside])) if np.any(outside) else None
            report.rate_inside = float(np.max(rates[~outside])) if np.any(~outside) else None
            report.expansion_radius = r

        if sup < 0:
            report.classification = GLOBALLY_CONTRACTING
            report.contraction_rate = -sup
        elif report.rate_outside is not None and report.rate_outside < 0:
            report.classification = BR_CONTRACTING
            report.contraction_rate = -report.rate_outside
            report.expansion_rate = max(report.rate_inside or 0.0, 0.0)
        logger.info(f"One-sided rate of '{f.name}': sup={sup:.6g} over {len(rates)} pairs -> {report.classification}")
        return report

    def estimate_diffusion_constants(self, G: DiffusionField, region: Box, n_pairs: int,
                                     seed: int) -> DiffusionConstantsEstimate:
        self._check_sampling(region, n_pairs, G.dimension)
        rng = np.random.default_rng(seed)
        x, y = self._sample_pairs(rng, region, n_pairs)
        # axis-aligned small steps catch entrywise Lipschitz constants
        base = region.sample(rng, n_pairs)
        axis = np.eye(G.dimension)[rng.integers(0, G.dimension, size=n_pairs)]
        xs = np.concatenate([x, base])
        ys = np.concatenate([y, base + min(self.perturbation_scales) * axis])

        dg = G.eval(0.0, xs) - G.eval(0.0, ys)
        dg2 = np.sum(dg ** 2, axis=(-2, -1))
        dx2 = np.sum((xs - ys) ** 2, axis=-1)
        ratio = dg2 / dx2
        points = np.concatenate([xs, ys])
        g2 = np.sum(G.eval(0.0, points) ** 2, axis=(-2, -1))
        estimate = DiffusionConstantsEstimate(
            L_G_squared_convention=float(np.max(ratio)),
            L_G_plain=float(np.sqrt(np.max(ratio))),
            frobenius_sup=float(np.sqrt(np.max(g2))),
            sublinearity=float(np.max(g2 / (1.0 + np.sum(points ** 2, axis=-1))))
        )
        logger.info(f"Diffusion constants of '{G.name}': {estimate.to_dict()}")
        return estimate

    def estimate_drift_growth(self, f: DriftField, region: Box, n_pairs: int, seed: int) -> Dict[str, float]:
        """Sampled Lipschitz constant and sublinearity s_f = sup ||f||^2 / (1 + ||x||^2)."""
        self._check_sampling(region, n_pairs, f.dimension)
        rng = np.random.default_rng(seed)
        x, y = self._sample_pairs(rng, region, n_pairs)
        df = f.eval(0.0, x) - f.eval(0.0, y)
        lipschitz = np.max(np.linalg.norm(df, axis=1) / np.linalg.norm(x - y, axis=1))
        points = np.concatenate([x, y])
        fx2 = np.sum(f.eval(0.0, points) ** 2, axis=-1)
        return {
            'lipschitz': float(lipschitz),
            'sublinearity': float(np.max(fx2 / (1.0 + np.sum(points ** 2, axis=-1))))
        }

    def find_equilibria(self, f: DriftField, region: Box, n_starts: int = 100,
                        root_tol: float = settings.ROOT_TOL, seed: int = 0) -> List[EquilibriumRecord]:
        """
        Multi-start damped Newton with finite-difference Jacobians.

        Roots closer than DEDUP_RADIUS are merged; stability comes from the
        largest real part of the Jacobian spectrum.
        """
        if not f.autonomous:
            raise ValidationError(f"Equilibria need an autonomous drift, '{f.name}' is not", key='f')
        rng = np.random.default_rng(seed)
        starts = np.concatenate([region.sample(rng, n_starts),
                                 0.5 * (np.array(region.lower) + np.array(region.upper))[None, :]])
        roots: List[np.ndarray] = []
        failures = 0
        for x0 in starts:
            root = self._damped_newton(f, x0, root_tol, region)
            if root is None:
                failures += 1
                continue
            if all(np.linalg.norm(root - r) > settings.DEDUP_RADIUS for r in roots):
                roots.append(root)
        if not roots:
            logger.warning(f"Newton did not converge from any of {len(starts)} starts for '{f.name}'")
            return []

        records = []
        for root in sorted(roots, key=lambda r: tuple(np.round(r, 8))):
            abscissa = float(np.max(np.linalg.eigvals(self.numerical_jacobian(f, root)).real))
            records.append(EquilibriumRecord(
                x_star=root,
                stability='stable' if abscissa < 0 else 'unstable',
                jacobian_spectrum_abscissa=abscissa,
                residual=float(np.linalg.norm(f.eval(0.0, root)))
            ))
        logger.info(f"Found {len(records)} equilibria of '{f.name}' ({failures} of {len(starts)} starts failed)")
        return records

    def local_contraction_ball(self, f: DriftField, x_star: np.ndarray, r_max: float, n_pairs: int,
                               seed: int, n_radii: int = 20, root_tol: float = 1e-8) -> LocalContractionBall:
        """
        Largest radius on a uniform grid up to r_max where every sampled pair contracts.

        Pairs are drawn per radius level and rates accumulate as a running sup, so
        the returned rate is monotone in the radius.
        """
        x_star = np.asarray(x_star, dtype=float)
        residual = float(np.linalg.norm(f.eval(0.0, x_star)))
        if residual > root_tol:
            raise ValidationError(f"x_star is not an equilibrium: ||f(x_star)|| = {residual:.3g}", key='x_star')
        if r_max <= 0 or n_pairs < self.min_pairs:
            raise ValidationError(f"Need r_max > 0 and n_pairs >= {self.min_pairs}", key='n_pairs')
        rng = np.random.default_rng(seed)
        radii = r_max * np.arange(1, n_radii + 1) / n_radii
        per_level = max(n_pairs // n_radii, 10)
        level_sup = np.empty(n_radii)
        for k, r in enumerate(radii):
            x = self._sample_ball(rng, x_star, r, per_level)
            y = self._sample_ball(rng, x_star, r, per_level)
            u = rng.standard_normal(x.shape)
            u /= np.linalg.norm(u, axis=1, keepdims=True)
            xs, ys = [x], [y]
            for delta in self.perturbation_scales:
                yp = x + delta * r * u
                inside = np.linalg.norm(yp - x_star, axis=1) <= r
                xs.append(x[inside])
                ys.append(yp[inside])
            n_aligned = max(per_level // 4, 4)
            delta = min(self.perturbation_scales)
            shell = rng.standard_normal((n_aligned, len(x_star)))
            shell /= np.linalg.norm(shell, axis=1, keepdims=True)
            # rates often peak at the rim, so sample the shell as well as the interior
            xa = np.concatenate([self._sample_ball(rng, x_star, r, n_aligned), x_star + r * (1.0 - 2.0 * delta) * shell])
            ya = self._eig_aligned(f, xa, delta * r)
            keep = np.linalg.norm(ya - x_star, axis=1) <= r
            xs.append(xa[keep])
            ys.append(ya[keep])
            level_sup[k] = np.max(self.pair_rates(f, np.concatenate(xs), np.concatenate(ys)))
        rates = np.maximum.accumulate(level_sup)

        contracting = np.nonzero(rates < 0)[0]
        if len(contracting) == 0:
            logger.warning(f"'{f.name}' is not locally contracting at {x_star.tolist()} (smallest radius rate {rates[0]:.3g})")
            return LocalContractionBall(x_star=x_star, r_star=None, c_star=None, radii=radii, rates=rates)
        k = contracting[-1]
        return LocalContractionBall(x_star=x_star, r_star=float(radii[k]), c_star=float(-rates[k]),
                                    radii=radii, rates=rates)

    @staticmethod
    def mass_sink_threshold(dimension: int, omega: float, r_star: float) -> float:
        """(d / 2) (omega / r*)^2."""
        return 0.5 * dimension * (omega / r_star) ** 2

    @staticmethod
    def pair_rates(f: DriftField, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        diff = x - y
        return np.sum((f.eval(0.0, x) - f.eval(0.0, y)) * diff, axis=-1) / np.sum(diff * diff, axis=-1)

    @staticmethod
    def numerical_jacobian(f: DriftField, x: np.ndarray, step: float = settings.NEWTON_FD_STEP) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        d = x.shape[0]
        offsets = step * np.eye(d)
        plus = f.eval(0.0, x[None, :] + offsets)
        minus = f.eval(0.0, x[None, :] - offsets)
        return ((plus - minus) / (2.0 * step)).T

    def _damped_newton(self, f: DriftField, x0: np.ndarray, root_tol: float, region: Box) -> Optional[np.ndarray]:
        x = np.array(x0, dtype=float)
        fx = f.eval(0.0, x)
        norm = np.linalg.norm(fx)
        span = np.max(np.array(region.upper) - np.array(region.lower))
        for _ in range(settings.NEWTON_MAX_ITER):
            if norm <= root_tol:
                return x
            step = np.linalg.lstsq(self.numerical_jacobian(f, x), -fx, rcond=None)[0]
            alpha = 1.0
            while alpha > 1e-6:
                candidate = x + alpha * step
                f_candidate = f.eval(0.0, candidate)
                if np.linalg.norm(f_candidate) < (1.0 - 1e-4 * alpha) * norm:
                    break
                alpha *= 0.5
            else:
                return None
            x, fx = candidate, f_candidate
            norm = np.linalg.norm(fx)
            if np.max(np.abs(x)) > 10.0 * span or not np.all(np.isfinite(x)):
                return None
        return x if norm <= root_tol else None

    def _aligned_pairs(self, f: DriftField, region: Box, rng: np.random.Generator, n: int):
        """Pairs at every perturbation scale: random directions plus the top eigenvector of sym(J)."""
        xs, ys = [], []
        for delta in self.perturbation_scales:
            x = region.sample(rng, n)
            u = rng.standard_normal(x.shape)
            u /= np.linalg.norm(u, axis=1, keepdims=True)
            xs += [x, x]
            ys += [x + delta * u, self._eig_aligned(f, x, delta)]
        return np.concatenate(xs), np.concatenate(ys)

    def _eig_aligned(self, f: DriftField, x: np.ndarray, delta: float) -> np.ndarray:
        out = np.empty_like(x)
        for i, xi in enumerate(x):
            jac = f.jacobian(0.0, xi) if f.jacobian is not None else self.numerical_jacobian(f, xi)
            _, vecs = np.linalg.eigh(0.5 * (jac + jac.T))
            out[i] = xi + delta * vecs[:, -1]
        return out

    @staticmethod
    def _sample_ball(rng: np.random.Generator, center: np.ndarray, r: float, n: int) -> np.ndarray:
        d = center.shape[0]
        u = rng.standard_normal((n, d))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        return center + r * rng.uniform(size=(n, 1)) ** (1.0 / d) * u

    @staticmethod
    def _sample_pairs(rng: np.random.Generator, region: Box, n: int):
        return region.sample(rng, n), region.sample(rng, n)

    def _check_sampling(self, region: Box, n_pairs: int, dimension: int) -> None:
        if n_pairs < self.min_pairs:
            raise ValidationError(f"n_pairs must be at least {self.min_pairs}, got {n_pairs}", key='n_pairs')
        if region.dimension != dimension:
            raise ValidationError(f"Region is {region.dimension}-D but the field is {dimension}-D", key='region')
