"""
Sparse snapshot dictionary built with the almost-linearly-dependent (ALD) test.

The dictionary keeps a lower-triangular Cholesky factor L of
k(X~, X~) + jitter * I that is extended by one row on every acceptance.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from .kernels import KernelSpec, evaluate, evaluate_columns, evaluate_diagonal, evaluate_matrix
from ..utils.config import Config
from ..utils.errors import IllConditionedDictionaryError
from ..utils.protocol import encode_matrix, decode_matrix


logger = logging.getLogger("Dictionary")


def _condition_estimate(chol: np.ndarray) -> float:
    # Condition of the triangular factor itself; only solves with L are performed.
    diag = np.abs(np.diag(chol))
    if diag.size == 0 or diag.min() <= 0.0:
        return float('inf')
    return float(diag.max() / diag.min())


@dataclass(frozen=True)
class SparseDictionary:
    """Selected snapshot columns X~ with the cached factor of their kernel matrix."""

    kernel: KernelSpec
    columns: np.ndarray  # N x m
    chol: np.ndarray  # m x m, lower triangular
    threshold: float
    jitter: float = 0.0
    seed: Optional[int] = None
    indices: Tuple[int, ...] = field(default_factory=tuple)

    @property
    def size(self) -> int:
        return self.columns.shape[1]

    @property
    def state_dim(self) -> int:
        return self.columns.shape[0]

    @classmethod
    def from_columns(cls, kernel: KernelSpec, columns, threshold: float = 1e-6,
                     jitter: float = 0.0, seed: Optional[int] = None,
                     indices: Tuple[int, ...] = ()) -> 'SparseDictionary':
        """Factor k(columns, columns) + jitter * I directly."""
        columns = np.array(columns, dtype=float, ndmin=2)
        gram = evaluate_matrix(kernel, columns, columns)
        gram[np.diag_indices_from(gram)] += jitter
        try:
            chol = cholesky(gram, lower=True)
        except np.linalg.LinAlgError:
            eigenvalues = np.linalg.eigvalsh(gram)
            condition = float('inf') if eigenvalues[0] <= 0 else float(eigenvalues[-1] / eigenvalues[0])
            raise IllConditionedDictionaryError("dictionary kernel matrix is not positive definite", condition)
        return cls(kernel, columns, chol, float(threshold), float(jitter), seed, tuple(indices))

    def ald_delta(self, x_c) -> Tuple[float, np.ndarray]:
        """Feature-space residual of ``x_c`` against the dictionary span.

        Returns:
            (delta, pi) with pi = (K~ + jitter I)^-1 k~ and delta = k(x_c, x_c) - k~^T pi
        """
        x_c = np.asarray(x_c, dtype=float)
        if x_c.ndim != 1 or x_c.shape[0] != self.state_dim:
            raise ValueError(f"candidate has shape {x_c.shape}, dictionary state dimension is {self.state_dim}")
        k_tilde = evaluate_columns(self.kernel, self.columns, x_c)
        _, pi = self._solve(k_tilde)
        delta = evaluate(self.kernel, x_c, x_c) - float(k_tilde @ pi)
        return delta, pi

    def _solve(self, k_tilde: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        condition = _condition_estimate(self.chol)
        if not np.isfinite(condition) or condition > Config.MAX_CONDITION:
            raise IllConditionedDictionaryError("dictionary kernel matrix is ill-conditioned", condition)
        z = solve_triangular(self.chol, k_tilde, lower=True)
        pi = solve_triangular(self.chol, z, lower=True, trans='T')
        return z, pi

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kernel': self.kernel.to_dict(),
            'columns': encode_matrix(self.columns),
            'chol': encode_matrix(self.chol),
            'nu': self.threshold,
            'jitter': self.jitter,
            'seed': self.seed,
            'indices': list(self.indices)
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SparseDictionary':
        """Restore a dictionary, reusing the stored factor when present.

        The factor written by ``build`` is kept as is: refactoring the dense
        kernel matrix can fail for dictionaries the ALD loop accepted.
        """
        kernel = KernelSpec.from_dict(data['kernel'])
        columns = decode_matrix(data['columns'])
        indices = tuple(data.get('indices', ()))
        if 'chol' not in data:
            return cls.from_columns(kernel, columns, threshold=data['nu'], jitter=data['jitter'],
                                    seed=data.get('seed'), indices=indices)
        chol = decode_matrix(data['chol'])
        if chol.shape != (columns.shape[1], columns.shape[1]):
            raise ValueError(f"factor has shape {chol.shape}, dictionary has {columns.shape[1]} columns")
        return cls(kernel, columns, chol, float(data['nu']), float(data['jitter']), data.get('seed'), indices)


def _extend_factor(chol: np.ndarray, z: np.ndarray, diagonal: float) -> np.ndarray:
    m = chol.shape[0]
    extended = np.zeros((m + 1, m + 1))
    extended[:m, :m] = chol
    extended[m, :m] = z
    extended[m, m] = diagonal
    return extended


def build(kernel: KernelSpec, X, nu: float, seed: int,
          jitter_scale: Optional[float] = None) -> SparseDictionary:
    """Select dictionary columns of ``X`` with the ALD test.

    Columns are visited in a seed-determined random order; the first visited
    column with a positive kernel norm seeds the dictionary and each other
    candidate is appended when its residual delta exceeds ``nu``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] == 0 or X.shape[0] == 0:
        raise ValueError(f"snapshot matrix must be non-empty N x Nt, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("snapshot matrix contains non-finite entries")
    if not nu > 0:
        raise ValueError(f"ALD threshold nu must be > 0, got {nu}")
    if jitter_scale is None:
        jitter_scale = Config.DICTIONARY_JITTER_SCALE

    self_kernel = evaluate_diagonal(kernel, X)
    jitter = float(jitter_scale * self_kernel.max())
    order = np.random.default_rng(seed).permutation(X.shape[1])

    # zero-norm snapshots have delta = 0 and are never accepted
    candidates = order[self_kernel[order] + jitter > 0.0]
    if candidates.size == 0:
        raise IllConditionedDictionaryError("every snapshot has zero kernel norm", float('inf'))
    first = candidates[0]
    selected = [int(first)]
    chol = np.array([[np.sqrt(self_kernel[first] + jitter)]])

    for index in candidates[1:]:
        x_c = X[:, index]
        columns = X[:, selected]
        condition = _condition_estimate(chol)
        if condition > Config.MAX_CONDITION:
            raise IllConditionedDictionaryError("dictionary kernel matrix is ill-conditioned", condition)
        k_tilde = evaluate_columns(kernel, columns, x_c)
        z = solve_triangular(chol, k_tilde, lower=True)
        delta = self_kernel[index] - float(z @ z)
        if delta < -Config.ALD_ROUNDOFF_TOL * max(self_kernel[index], 1.0):
            logger.debug(f"negative ALD residual {delta:.3e} at column {index}")
        delta = max(delta, 0.0)
        if delta > nu:
            chol = _extend_factor(chol, z, np.sqrt(delta + jitter))
            selected.append(int(index))

    logger.debug(f"dictionary of {len(selected)} columns from {X.shape[1]} snapshots (nu={nu:g})")
    return SparseDictionary(kernel, X[:, selected].copy(), chol, float(nu), jitter, seed, tuple(selected))
