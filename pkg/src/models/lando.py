"""
LANDO surrogate f(x) = W~ k(X~, x) for a single parameter instance.

Covers target construction (finite-difference derivatives or shifted
snapshots), the weight solve over the sparse dictionary, and forward
simulation by fixed-step RK4 (continuous) or iteration (discrete).
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np

from .dictionary import SparseDictionary, build
from .kernels import KernelSpec, evaluate_columns, evaluate_matrix
from ..utils.config import Config
from ..utils.errors import DegenerateKernelMatrixError, IntegrationBlowUpError
from ..utils.protocol import encode_matrix, decode_matrix


logger = logging.getLogger("Lando")

SPACING_TOL = 1e-12


class DynamicsMode(Enum):
    """Continuous models learn dx/dt, discrete models learn x_j -> x_{j+1}."""
    CONTINUOUS = "continuous"
    DISCRETE = "discrete"


def derivative_targets(X, dt: float) -> np.ndarray:
    """Second-order finite-difference time derivative of the snapshot columns.

    Central differences at interior columns, second-order one-sided
    stencils at both ends.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] < 3:
        raise ValueError(f"derivative targets need at least 3 snapshots, got shape {X.shape}")
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    return np.gradient(X, dt, axis=1, edge_order=2)


@dataclass(frozen=True)
class SnapshotSet:
    """State trajectory of one parameter instance and its regression targets."""

    X: np.ndarray  # N x Nt
    times: np.ndarray  # Nt
    mode: DynamicsMode
    Y: np.ndarray  # N x Nt (continuous) or N x (Nt - 1) (discrete)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        times = np.asarray(self.times, dtype=float)
        Y = np.asarray(self.Y, dtype=float)
        if X.ndim != 2 or X.shape[1] < 2:
            raise ValueError(f"snapshot matrix must be N x Nt with Nt >= 2, got shape {X.shape}")
        if times.shape != (X.shape[1],):
            raise ValueError(f"times has shape {times.shape}, expected ({X.shape[1]},)")
        steps = np.diff(times)
        if np.any(steps <= 0):
            raise ValueError("times must be strictly increasing")
        if np.max(np.abs(steps - steps.mean())) > SPACING_TOL * max(abs(times[-1]), steps.mean()):
            raise ValueError("times must be uniformly spaced")
        expected = X.shape[1] if self.mode is DynamicsMode.CONTINUOUS else X.shape[1] - 1
        if Y.shape != (X.shape[0], expected):
            raise ValueError(f"targets have shape {Y.shape}, expected {(X.shape[0], expected)}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise ValueError("snapshot data contain non-finite entries")
        object.__setattr__(self, 'X', X)
        object.__setattr__(self, 'times', times)
        object.__setattr__(self, 'Y', Y)

    @classmethod
    def from_trajectory(cls, X, times, mode: DynamicsMode, Y=None) -> 'SnapshotSet':
        """Build a snapshot set, deriving targets when ``Y`` is not given."""
        X = np.asarray(X, dtype=float)
        times = np.asarray(times, dtype=float)
        if Y is None:
            if mode is DynamicsMode.CONTINUOUS:
                Y = derivative_targets(X, float(times[1] - times[0]))
            else:
                Y = X[:, 1:]
        return cls(X, times, mode, Y)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def state_dim(self) -> int:
        return self.X.shape[0]

    @property
    def inputs(self) -> np.ndarray:
        """Snapshot columns paired with the target columns."""
        if self.mode is DynamicsMode.DISCRETE:
            return self.X[:, :-1]
        return self.X


@dataclass(frozen=True)
class LandoModel:
    """Fitted surrogate defined by the kernel, dictionary and weight matrix."""

    dictionary: SparseDictionary
    weights: np.ndarray  # N x m
    mode: DynamicsMode
    fit_residual: float

    def __post_init__(self):
        if self.weights.shape[1] != self.dictionary.size:
            raise ValueError(f"weights have {self.weights.shape[1]} columns, dictionary has {self.dictionary.size}")

    @property
    def kernel(self) -> KernelSpec:
        return self.dictionary.kernel

    @property
    def state_dim(self) -> int:
        return self.weights.shape[0]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kernel': self.kernel.to_dict(),
            'mode': self.mode.value,
            'dictionary': self.dictionary.to_dict(),
            'weights': encode_matrix(self.weights),
            'fit_residual': self.fit_residual,
            'state_dim': self.state_dim
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'LandoModel':
        return cls(
            SparseDictionary.from_dict(data['dictionary']),
            decode_matrix(data['weights']),
            DynamicsMode(data['mode']),
            float(data['fit_residual'])
        )


def solve_weights(Y: np.ndarray, K: np.ndarray, rcond: float) -> np.ndarray:
    """Least-squares W minimising ||Y - W K||_F via a truncated SVD of K."""
    U, s, Vt = np.linalg.svd(K, full_matrices=False)
    if s.size == 0 or not np.isfinite(s[0]) or s[0] <= 0.0:
        raise DegenerateKernelMatrixError()
    keep = s > rcond * s[0]
    return ((Y @ Vt[keep].T) / s[keep]) @ U[:, keep].T


def fit(snapshots: SnapshotSet, kernel: KernelSpec, nu: float, seed: int,
        rcond: Optional[float] = None, jitter_scale: Optional[float] = None) -> LandoModel:
    """Fit W~ = Y k(X~, X)^+ over an ALD dictionary of the snapshot inputs."""
    if rcond is None:
        rcond = Config.PINV_RCOND
    X = snapshots.inputs
    Y = snapshots.Y
    dictionary = build(kernel, X, nu, seed, jitter_scale=jitter_scale)
    K = evaluate_matrix(kernel, dictionary.columns, X)
    weights = solve_weights(Y, K, rcond)

    y_norm = np.linalg.norm(Y)
    residual = np.linalg.norm(Y - weights @ K)
    fit_residual = float(residual / y_norm) if y_norm > 0 else float(residual)
    logger.debug(f"fitted {snapshots.mode.value} model: m={dictionary.size}, residual={fit_residual:.3e}")
    return LandoModel(dictionary, weights, snapshots.mode, fit_residual)


def predict_dynamics(model: LandoModel, x) -> np.ndarray:
    """Surrogate right-hand side (continuous) or next state (discrete) at ``x``."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != model.state_dim:
        raise ValueError(f"state has shape {x.shape}, model state dimension is {model.state_dim}")
    return model.weights @ evaluate_columns(model.kernel, model.dictionary.columns, x)


def _rk4_step(model: LandoModel, x: np.ndarray, h: float) -> np.ndarray:
    k1 = predict_dynamics(model, x)
    k2 = predict_dynamics(model, x + 0.5 * h * k1)
    k3 = predict_dynamics(model, x + 0.5 * h * k2)
    k4 = predict_dynamics(model, x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(model: LandoModel, x0, t_end: float, step: float) -> Tuple[np.ndarray, np.ndarray]:
    """Integrate dx/dt = f(x) with classical RK4 from t=0 to ``t_end``.

    The last step is shortened to land exactly on ``t_end``.

    Returns:
        (times, states) with states of shape N x (steps + 1), x0 first
    """
    if model.mode is not DynamicsMode.CONTINUOUS:
        raise ValueError("integrate requires a continuous-time model")
    if not t_end > 0:
        raise ValueError(f"t_end must be > 0, got {t_end}")
    if not step > 0:
        raise ValueError(f"step must be > 0, got {step}")
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (model.state_dim,):
        raise ValueError(f"x0 has shape {x.shape}, model state dimension is {model.state_dim}")

    n_steps = max(int(np.ceil(t_end / step - 1e-9)), 1)
    times = np.minimum(np.arange(n_steps + 1) * step, t_end)
    times[-1] = t_end
    states = np.empty((x.shape[0], n_steps + 1))
    states[:, 0] = x
    for j in range(n_steps):
        try:
            x = _rk4_step(model, x, times[j + 1] - times[j])
        except ValueError:
            # a non-finite intermediate stage is rejected by the kernel evaluation
            raise IntegrationBlowUpError("surrogate integration blew up", time=float(times[j]))
        if not np.all(np.isfinite(x)):
            raise IntegrationBlowUpError("surrogate integration blew up", time=float(times[j + 1]))
        states[:, j + 1] = x
    return times, states


def rollout(model: LandoModel, x0, steps: int) -> np.ndarray:
    """Iterate x_{j+1} = f(x_j); returns N x (steps + 1) states including x0."""
    if model.mode is not DynamicsMode.DISCRETE:
        raise ValueError("rollout requires a discrete-time model")
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (model.state_dim,):
        raise ValueError(f"x0 has shape {x.shape}, model state dimension is {model.state_dim}")
    states = np.empty((x.shape[0], steps + 1))
    states[:, 0] = x
    for j in range(steps):
        x = predict_dynamics(model, x)
        if not np.all(np.isfinite(x)):
            raise IntegrationBlowUpError("surrogate rollout blew up", step=j + 1)
        states[:, j + 1] = x
    return states
