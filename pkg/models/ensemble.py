"""
Trajectory, coupled-pair and particle-ensemble models.
"""
from dataclasses import dataclass, field
from typing import Dict, Any, Optional

import numpy as np


@dataclass
class Trajectory:
    """Strong-solution path sampled on a uniform time grid."""
    times: np.ndarray
    states: np.ndarray  # (n_times, d)
    seed: int
    dt: float

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError(f"times ({len(self.times)}) and states ({len(self.states)}) differ in length")

    @property
    def dimension(self) -> int:
        return self.states.shape[1]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'seed': self.seed,
            'dt': self.dt,
            'n_times': len(self.times),
            'final_time': float(self.times[-1]),
            'final_state': self.states[-1].tolist()
        }


@dataclass
class CoupledPair:
    """Two trajectories driven by one Brownian path."""
    trajectory_x: Trajectory
    trajectory_z: Trajectory
    shared_noise_seed: int

    def separation(self) -> np.ndarray:
        """||X_t - Z_t|| along the common time grid."""
        return np.linalg.norm(self.trajectory_x.states - self.trajectory_z.states, axis=1)


@dataclass
class ParticleEnsemble:
    """Empirical measure of N (optionally weighted) particles at one time."""
    particles: np.ndarray  # (N, d)
    master_seed: int
    time: float = 0.0
    weights: Optional[np.ndarray] = None
    steps_taken: int = 0  # noise counter; continuing a run resumes the streams here

    def __post_init__(self):
        self.particles = np.atleast_2d(np.asarray(self.particles, dtype=float))
        if self.particles.shape[0] < 1:
            raise ValueError("An ensemble needs at least one particle")
        if not np.all(np.isfinite(self.particles)):
            raise ValueError("Ensemble particles must be finite")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (self.particles.shape[0],) or np.any(w < 0) or w.sum() <= 0:
                raise ValueError("Weights must be non-negative, one per particle, with positive sum")
            self.weights = w / w.sum()

    @property
    def size(self) -> int:
        return self.particles.shape[0]

    @property
    def dimension(self) -> int:
        return self.particles.shape[1]

    def normalized_weights(self) -> np.ndarray:
        if self.weights is None:
            return np.full(self.size, 1.0 / self.size)
        return self.weights

    def mean(self) -> np.ndarray:
        return self.normalized_weights() @ self.particles

    def covariance(self) -> np.ndarray:
        if self.weights is None:
            return np.cov(self.particles, rowvar=False)
        return np.cov(self.particles, rowvar=False, aweights=self.weights)

    def with_state(self, particles: np.ndarray, time: float, steps_taken: int) -> 'ParticleEnsemble':
        return ParticleEnsemble(
            particles=particles,
            master_seed=self.master_seed,
            time=time,
            weights=self.weights,
            steps_taken=steps_taken
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'size': self.size,
            'dimension': self.dimension,
            'time': self.time,
            'master_seed': self.master_seed,
            'steps_taken': self.steps_taken,
            'mean': self.mean().tolist()
        }
