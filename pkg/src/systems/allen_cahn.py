"""
One-dimensional Allen-Cahn equation u_t = lambda u_xx - epsilon (u^3 - u) on [-1, 1].

Boundary values are held at -1. Diffusion is treated implicitly and the
reaction term explicitly on a fine internal step; snapshots are subsampled.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from ..models.lando import DynamicsMode, SnapshotSet
from ..utils.errors import SolverError


logger = logging.getLogger("AllenCahn")

BOUNDARY_VALUE = -1.0
MIN_POINTS = 50


@dataclass(frozen=True)
class AllenCahnParams:
    """Diffusion lambda, reaction scale epsilon, grid points nx (boundaries included)."""

    lam: float
    epsilon: float
    nx: int = 250
    dt: float = 1e-4

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if not np.isfinite(self.epsilon) or self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.nx < MIN_POINTS:
            raise ValueError(f"nx must be >= {MIN_POINTS}, got {self.nx}")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")

    @property
    def h(self) -> float:
        return 2.0 / (self.nx - 1)

    @property
    def interior(self) -> np.ndarray:
        return np.linspace(-1.0, 1.0, self.nx)[1:-1]


def reaction(u: np.ndarray) -> np.ndarray:
    """f(u) = u^3 - u."""
    return u ** 3 - u


def initial_condition(p: AllenCahnParams) -> np.ndarray:
    x = p.interior
    return x ** 2 * np.cos(np.pi * x)


def solve_allen_cahn(p: AllenCahnParams, t_grid, u0=None) -> SnapshotSet:
    """Semi-implicit solution sampled on the uniform ``t_grid`` starting at 0.

    Args:
        p: Coefficients and discretisation
        t_grid: Snapshot times, t_grid[0] == 0
        u0: Interior initial values overriding x^2 cos(pi x)

    Returns:
        Discrete-mode SnapshotSet with state dimension nx - 2
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 2 or t_grid[0] != 0.0:
        raise ValueError("t_grid must start at 0 and hold at least 2 points")
    spacing = float(t_grid[1] - t_grid[0])
    substeps = max(int(round(spacing / p.dt)), 1)
    dt = spacing / substeps

    n = p.nx - 2
    u = initial_condition(p) if u0 is None else np.asarray(u0, dtype=float).ravel().copy()
    if u.shape != (n,):
        raise ValueError(f"initial condition has {u.size} values, expected {n}")

    coefficient = p.lam / p.h ** 2
    second_difference = sparse.diags([np.ones(n - 1), -2.0 * np.ones(n), np.ones(n - 1)], [-1, 0, 1])
    implicit = splu((sparse.identity(n) - dt * coefficient * second_difference).tocsc())
    boundary = np.zeros(n)
    boundary[0] = boundary[-1] = dt * coefficient * BOUNDARY_VALUE

    X = np.empty((n, t_grid.size))
    X[:, 0] = u
    for j in range(1, t_grid.size):
        for _ in range(substeps):
            u = implicit.solve(u - dt * p.epsilon * reaction(u) + boundary)
        if not np.all(np.isfinite(u)):
            raise SolverError(f"Allen-Cahn solution blew up before t={t_grid[j]:.4g}")
        X[:, j] = u
    logger.debug(f"Allen-Cahn lambda={p.lam:.2e} epsilon={p.epsilon:.3f}: {substeps} substeps per snapshot")
    return SnapshotSet.from_trajectory(X, t_grid, DynamicsMode.DISCRETE)
