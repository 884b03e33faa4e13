"""
Proper orthogonal decomposition of a cross-parameter snapshot matrix.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from ..utils.config import Config
from ..utils.protocol import encode_matrix, decode_matrix


logger = logging.getLogger("POD")


@dataclass(frozen=True)
class PodBasis:
    """Orthonormal reduced basis Phi (N x n) with the full singular spectrum."""

    Phi: np.ndarray
    singular_values: np.ndarray
    energy_threshold: float

    @property
    def n(self) -> int:
        return self.Phi.shape[1]

    @property
    def state_dim(self) -> int:
        return self.Phi.shape[0]

    @property
    def energy(self) -> np.ndarray:
        """Cumulative energy fraction captured by the leading 1..r modes."""
        squared = self.singular_values ** 2
        return np.cumsum(squared) / squared.sum()

    @property
    def captured_energy(self) -> float:
        return float(self.energy[self.n - 1])

    def project(self, x) -> np.ndarray:
        """Reduced coordinates Phi^T x of a state (or of the columns of a matrix)."""
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.state_dim or x.ndim > 2:
            raise ValueError(f"state has shape {x.shape}, basis state dimension is {self.state_dim}")
        return self.Phi.T @ x

    def reconstruct(self, xr) -> np.ndarray:
        """Full state Phi xr from reduced coordinates (vector or matrix columns)."""
        xr = np.asarray(xr, dtype=float)
        if xr.shape[0] != self.n or xr.ndim > 2:
            raise ValueError(f"reduced state has shape {xr.shape}, basis rank is {self.n}")
        return self.Phi @ xr

    def projection_error(self, S) -> float:
        """Relative Frobenius error of projecting the columns of ``S`` onto the basis."""
        S = np.asarray(S, dtype=float)
        norm = np.linalg.norm(S)
        if norm == 0.0:
            return 0.0
        return float(np.linalg.norm(S - self.reconstruct(self.project(S))) / norm)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'Phi': encode_matrix(self.Phi),
            'singular_values': self.singular_values.tolist(),
            'energy_threshold': self.energy_threshold
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'PodBasis':
        return cls(
            decode_matrix(data['Phi']),
            np.asarray(data['singular_values'], dtype=float),
            float(data['energy_threshold'])
        )


def truncation_rank(singular_values: np.ndarray, energy_threshold: float) -> int:
    """Smallest rank whose cumulative squared singular values reach the threshold."""
    squared = singular_values ** 2
    energy = np.cumsum(squared) / squared.sum()
    rank = int(np.searchsorted(energy, energy_threshold, side='left')) + 1
    return min(rank, singular_values.size)


def compute(S, energy_threshold: Optional[float] = None, n_modes: Optional[int] = None) -> PodBasis:
    """POD basis of the snapshot columns of ``S`` by thin SVD.

    Args:
        S: Snapshot matrix N x N_mu, one column per parameter instance
        energy_threshold: Captured energy fraction in (0, 1]
        n_modes: Fixed rank overriding the energy criterion

    Returns:
        PodBasis with the leading left singular vectors
    """
    if energy_threshold is None:
        energy_threshold = Config.POD_ENERGY_THRESHOLD
    if not 0.0 < energy_threshold <= 1.0:
        raise ValueError(f"energy threshold must lie in (0, 1], got {energy_threshold}")
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[1] < 1:
        raise ValueError(f"snapshot matrix must be N x N_mu with N_mu >= 1, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise ValueError("snapshot matrix contains non-finite entries")
    if not np.any(S):
        raise ValueError("zero snapshot matrix")

    U, s, _ = np.linalg.svd(S, full_matrices=False)
    if n_modes is not None:
        if not 1 <= n_modes <= s.size:
            raise ValueError(f"n_modes must lie in [1, {s.size}], got {n_modes}")
        n = int(n_modes)
    else:
        n = truncation_rank(s, energy_threshold)
    Phi = U[:, :n].copy()

    # sign convention: largest-magnitude entry of every mode is positive
    pivots = np.argmax(np.abs(Phi), axis=0)
    signs = np.sign(Phi[pivots, np.arange(n)])
    signs[signs == 0] = 1.0
    Phi *= signs

    basis = PodBasis(Phi, s, float(energy_threshold))
    logger.debug(f"POD rank {n} of {s.size}, captured energy {basis.captured_energy:.8f}")
    return basis
