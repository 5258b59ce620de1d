"""
Input-driven two-neuron Hopfield model and its energy landscape.

Dynamics: dx = (-x + W_u tanh(beta x)) dt with W_u = s * M diag(u) M^T and
M = [[1, 1], [1, -1]]. With the default s = 1/2 the columns of M are
eigenvectors of W_u with eigenvalues u_1, u_2.
"""
from dataclasses import dataclass, field
from typing import Dict, Any

import numpy as np

import config.settings as settings

PATTERNS = np.array([[1.0, 1.0], [1.0, -1.0]])  # columns M^1 = (1, 1), M^2 = (1, -1)

GLOBALLY_CONTRACTING = 'globally_contracting'
MULTISTABLE = 'multistable'
CRITICAL = 'critical'


@dataclass(frozen=True)
class HopfieldModel:
    beta: float
    u: np.ndarray
    connectivity_scale: float = settings.HOPFIELD_CONNECTIVITY_SCALE
    M: np.ndarray = field(default_factory=lambda: PATTERNS.copy())

    def __post_init__(self):
        object.__setattr__(self, 'u', np.asarray(self.u, dtype=float))

    @property
    def W(self) -> np.ndarray:
        return self.connectivity_scale * self.M @ np.diag(self.u) @ self.M.T

    @property
    def regime(self) -> str:
        # eigenvalues of W_u are s * ||M^i||^2 * u_i
        gain = self.beta * 2.0 * self.connectivity_scale * float(np.max(self.u))
        if gain < 1.0:
            return GLOBALLY_CONTRACTING
        if gain > 1.0:
            return MULTISTABLE
        return CRITICAL

    def activation(self, x: np.ndarray) -> np.ndarray:
        return np.tanh(self.beta * np.asarray(x, dtype=float))

    def activation_slope(self, x: np.ndarray) -> np.ndarray:
        """Diagonal of J_x Phi, i.e. beta * sech^2(beta x)."""
        return self.beta / np.cosh(self.beta * np.asarray(x, dtype=float)) ** 2

    def drift(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return -x + self.activation(x) @ self.W.T

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        return -np.eye(2) + self.W * self.activation_slope(x)[None, :]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'beta': self.beta,
            'u': self.u.tolist(),
            'connectivity_scale': self.connectivity_scale,
            'W_u': self.W.tolist(),
            'regime': self.regime
        }


@dataclass(frozen=True)
class EnergyLandscape:
    """E(x) = -1/2 Phi^T W Phi + x^T Phi - sum_i log(cosh(beta x_i)) / beta."""
    model: HopfieldModel

    def energy(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        phi = self.model.activation(x)
        quad = np.einsum('...i,ij,...j->...', phi, self.model.W, phi)
        bx = self.model.beta * x
        log_cosh = np.logaddexp(bx, -bx) - np.log(2.0)
        return -0.5 * quad + np.sum(x * phi, axis=-1) - np.sum(log_cosh, axis=-1) / self.model.beta

    def gradient(self, x: np.ndarray) -> np.ndarray:
        """grad_i E = Phi'(x_i) * (x_i - (W Phi)_i)."""
        x = np.asarray(x, dtype=float)
        phi = self.model.activation(x)
        return self.model.activation_slope(x) * (x - phi @ self.model.W.T)

    def metric(self, x: np.ndarray) -> np.ndarray:
        """Diagonal of P(x) = J_x Phi(x)^{-1}, i.e. cosh^2(beta x_i) / beta."""
        return np.cosh(self.model.beta * np.asarray(x, dtype=float)) ** 2 / self.model.beta

    def metric_derivative(self, x: np.ndarray) -> np.ndarray:
        """d/dx_i of P_ii(x) = 2 tanh(beta x_i) / (1 - tanh^2(beta x_i)) = sinh(2 beta x_i)."""
        return np.sinh(2.0 * self.model.beta * np.asarray(x, dtype=float))

    def reconstructed_drift(self, x: np.ndarray) -> np.ndarray:
        return -self.metric(x) * self.gradient(x)
