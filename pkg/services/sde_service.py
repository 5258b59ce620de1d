"""
Euler-Maruyama simulation of coupled trajectories and particle ensembles.

Noise is counter-based: the increment for particle i at global step k is row
i % NOISE_BLOCK of a standard-normal block drawn from a Philox generator whose
key comes from the master seed and whose counter starts at (0, 0, k, i // NOISE_BLOCK).
It therefore depends only on (seed, i, k), never on thread count or on how a
run is split into calls.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

import numpy as np

import config.settings as settings
from models.ensemble import Trajectory, CoupledPair, ParticleEnsemble
from models.fields import DriftField, DiffusionField
from services.exceptions import DivergenceError, ValidationError

logger = logging.getLogger(__name__)

_INIT_STREAM = 1  # spawn key of initial-measure sampling, kept apart from the noise key


class SDEService:
    """Service for strong-solution simulation."""

    def __init__(self, workers: int = settings.WORKERS, block_size: int = settings.NOISE_BLOCK):
        self.workers = max(1, int(workers))
        self.block_size = int(block_size)

    def noise_key(self, master_seed: int) -> np.ndarray:
        return np.random.SeedSequence(int(master_seed)).generate_state(2, dtype=np.uint64)

    def noise_block(self, key: np.ndarray, step: int, block: int, dimension: int) -> np.ndarray:
        """Standard normals of shape (block_size, dimension) for one (step, block) counter."""
        counter = np.array([0, 0, step, block], dtype=np.uint64)
        gen = np.random.Generator(np.random.Philox(counter=counter, key=key))
        return gen.standard_normal((self.block_size, dimension))

    def step_em(self, x: np.ndarray, f: DriftField, G: DiffusionField, t: float, dt: float,
                dW: np.ndarray, step: int = 0) -> np.ndarray:
        """
        One Euler-Maruyama step x + f(t, x) dt + G(t, x) dW.

        Accepts a single state (d,) or a batch (n, d).
        """
        if dt <= 0:
            raise ValidationError(f"dt must be positive, got {dt}", key='dt')
        x = np.asarray(x, dtype=float)
        dW = np.asarray(dW, dtype=float)
        if dW.shape != x.shape or x.shape[-1] != f.dimension:
            raise ValidationError(f"Shape mismatch: state {x.shape}, dW {dW.shape}, dimension {f.dimension}", key='dW')
        out = x + f.eval(t, x) * dt + np.einsum('...ij,...j->...i', G.eval(t, x), dW)
        if not np.all(np.isfinite(out)):
            bad = np.argwhere(~np.all(np.isfinite(np.atleast_2d(out)), axis=-1)).ravel()
            index = int(bad[0]) if out.ndim > 1 else None
            state = np.atleast_2d(x)[bad[0]].tolist()
            logger.error(f"Non-finite state at step {step}, index {index}")
            raise DivergenceError(f"Euler-Maruyama step produced a non-finite state at step {step}",
                                  step=step, index=index, state=state)
        return out

    def evolve_ensemble(self, e: ParticleEnsemble, f: DriftField, G: DiffusionField,
                        dt: float, n_steps: int) -> ParticleEnsemble:
        """
        Advance every particle n_steps, continuing the noise streams at e.steps_taken.

        Blocks of particles run in parallel threads; output is bit-identical for any worker count.
        """
        if dt <= 0:
            raise ValidationError(f"dt must be positive, got {dt}", key='dt')
        if n_steps < 0:
            raise ValidationError(f"n_steps must be non-negative, got {n_steps}", key='n_steps')
        if e.dimension != f.dimension or f.dimension != G.dimension:
            raise ValidationError(f"Ensemble dimension {e.dimension} does not match fields", key='dimension')
        if n_steps == 0:
            return e

        key = self.noise_key(e.master_seed)
        n_blocks = (e.size + self.block_size - 1) // self.block_size
        blocks = [e.particles[b * self.block_size:(b + 1) * self.block_size].copy() for b in range(n_blocks)]

        def run_block(b: int) -> np.ndarray:
            x = blocks[b]
            sqrt_dt = np.sqrt(dt)
            for k in range(n_steps):
                step = e.steps_taken + k
                t = e.time + k * dt
                dW = sqrt_dt * self.noise_block(key, step, b, e.dimension)[:len(x)]
                try:
                    x = self.step_em(x, f, G, t, dt, dW, step=step)
                except DivergenceError as err:
                    err.index = b * self.block_size + (err.index or 0)
                    raise
            return x

        if self.workers == 1 or n_blocks == 1:
            results = [run_block(b) for b in range(n_blocks)]
        else:
            with ThreadPoolExecutor(max_workers=min(self.workers, n_blocks), thread_name_prefix="ensemble") as executor:
                results = list(executor.map(run_block, range(n_blocks)))

        logger.debug(f"Evolved {e.size} particles by {n_steps} steps (seed {e.master_seed})")
        return e.with_state(np.concatenate(results, axis=0), e.time + n_steps * dt, e.steps_taken + n_steps)

    def simulate_trajectory(self, f: DriftField, G: DiffusionField, x0: Sequence[float],
                            T: float, dt: float, seed: int) -> Trajectory:
        """Particle 0 of a one-particle ensemble, recorded at every step."""
        n_steps = self.steps_for(T, dt)
        return self._simulate_rows(f, G, np.atleast_2d(np.asarray(x0, dtype=float)), n_steps, dt, seed)[0]

    def simulate_coupled_pair(self, f: DriftField, G: DiffusionField, x0: Sequence[float], z0: Sequence[float],
                              T: float, dt: float, seed: int) -> CoupledPair:
        """Both copies consume the increments of particle 0 under ``seed``."""
        n_steps = self.steps_for(T, dt)
        x0 = np.asarray(x0, dtype=float)
        z0 = np.asarray(z0, dtype=float)
        if x0.shape != z0.shape:
            raise ValidationError(f"Initial states differ in shape: {x0.shape} vs {z0.shape}", key='z0')
        traj_x, traj_z = self._simulate_rows(f, G, np.stack([x0, z0]), n_steps, dt, seed)
        return CoupledPair(trajectory_x=traj_x, trajectory_z=traj_z, shared_noise_seed=int(seed))

    def coupled_pair_separations(self, f: DriftField, G: DiffusionField, x0: np.ndarray, z0: np.ndarray,
                                 T: float, dt: float, seeds: Sequence[int]) -> np.ndarray:
        """Squared separations ||X_t - Z_t||^2, one row per pair, in parallel over pairs."""
        def run(i: int) -> np.ndarray:
            pair = self.simulate_coupled_pair(f, G, x0[i], z0[i], T, dt, seeds[i])
            return pair.separation() ** 2

        with ThreadPoolExecutor(max_workers=self.workers, thread_name_prefix="pairs") as executor:
            return np.array(list(executor.map(run, range(len(seeds)))))

    def sample_initial(self, kind: str, center: Sequence[float], scale: float, n: int, seed: int,
                       stream: int = _INIT_STREAM) -> ParticleEnsemble:
        """
        Draw n particles from a dirac, gaussian, uniform_disk or uniform_box measure.

        The ensemble carries ``seed`` as its master noise seed; ``stream`` separates
        initial draws of ensembles that share that seed.
        """
        center = np.asarray(center, dtype=float)
        d = center.shape[0]
        rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(stream,)))
        if kind == 'dirac':
            particles = np.tile(center, (n, 1))
        elif kind == 'gaussian':
            particles = center + scale * rng.standard_normal((n, d))
        elif kind == 'uniform_disk':
            direction = rng.standard_normal((n, d))
            direction /= np.linalg.norm(direction, axis=1, keepdims=True)
            radius = scale * rng.uniform(size=(n, 1)) ** (1.0 / d)
            particles = center + radius * direction
        elif kind == 'uniform_box':
            particles = center + rng.uniform(-scale, scale, size=(n, d))
        else:
            raise ValidationError(f"Unknown initial measure '{kind}'", key='kind')
        return ParticleEnsemble(particles=particles, master_seed=int(seed))

    def _simulate_rows(self, f: DriftField, G: DiffusionField, rows: np.ndarray, n_steps: int,
                       dt: float, seed: int):
        key = self.noise_key(seed)
        states = np.empty((n_steps + 1,) + rows.shape)
        states[0] = rows
        x = rows.copy()
        sqrt_dt = np.sqrt(dt)
        for k in range(n_steps):
            dW = sqrt_dt * self.noise_block(key, k, 0, rows.shape[1])[0]
            x = self.step_em(x, f, G, k * dt, dt, np.broadcast_to(dW, x.shape), step=k)
            states[k + 1] = x
        times = np.arange(n_steps + 1) * dt
        return [Trajectory(times=times, states=states[:, j].copy(), seed=int(seed), dt=dt) for j in range(rows.shape[0])]

    @staticmethod
    def steps_for(T: float, dt: float) -> int:
        if T <= 0 or dt <= 0:
            raise ValidationError(f"T and dt must be positive, got T={T}, dt={dt}", key='T')
        n = int(round(T / dt))
        if abs(n * dt - T) > 1e-9 * max(1.0, T):
            raise ValidationError(f"T={T} is not an integer multiple of dt={dt}", key='T')
        return n

