"""
Two-dimensional heat equation u_t = D (u_xx + u_yy) on the square (0, L)^2.

Zero Dirichlet boundary, second-order central differences on a uniform
interior grid, Crank-Nicolson in time. The state vector holds the interior
values flattened row-major (y rows, x columns).
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from ..models.lando import DynamicsMode, SnapshotSet
from ..utils.errors import SolverError


logger = logging.getLogger("Heat")

MIN_GRID = 16


@dataclass(frozen=True)
class HeatParams:
    """Diffusion coefficient, initial-condition shape and discretisation."""

    D: float
    alpha_ic: float = 0.6
    grid: Tuple[int, int] = (32, 32)
    dt: Optional[float] = None  # internal step; defaults to the snapshot spacing
    length: float = 5.0

    def __post_init__(self):
        if not np.isfinite(self.D) or self.D <= 0:
            raise ValueError(f"diffusion coefficient must be > 0, got {self.D}")
        nx, ny = (int(n) for n in self.grid)
        if nx < MIN_GRID or ny < MIN_GRID:
            raise ValueError(f"grid must be at least {MIN_GRID}x{MIN_GRID}, got {nx}x{ny}")
        if not 0 <= self.alpha_ic < 1:
            raise ValueError(f"alpha_ic must lie in [0, 1), got {self.alpha_ic}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        object.__setattr__(self, 'grid', (nx, ny))

    @property
    def spacing(self) -> Tuple[float, float]:
        nx, ny = self.grid
        return self.length / (nx + 1), self.length / (ny + 1)

    def coordinates(self) -> Tuple[np.ndarray, np.ndarray]:
        """Interior node coordinates as (x, y) meshes of shape (ny, nx)."""
        (nx, ny), (hx, hy) = self.grid, self.spacing
        return np.meshgrid(hx * np.arange(1, nx + 1), hy * np.arange(1, ny + 1))


def initial_condition(p: HeatParams) -> np.ndarray:
    """Product of tanh(alpha sin(w s) / (1 - alpha cos(w s))) in x and y, w = 2 pi / L."""
    x, y = p.coordinates()
    w = 2.0 * np.pi / p.length

    def profile(s):
        return np.tanh(p.alpha_ic * np.sin(w * s) / (1.0 - p.alpha_ic * np.cos(w * s)))

    return (profile(x) * profile(y)).ravel()


def laplacian(p: HeatParams) -> sparse.csc_matrix:
    """Five-point Laplacian on the interior nodes, row-major ordering."""
    (nx, ny), (hx, hy) = p.grid, p.spacing

    def second_difference(n, h):
        return sparse.diags([np.ones(n - 1), -2.0 * np.ones(n), np.ones(n - 1)], [-1, 0, 1]) / h ** 2

    return (sparse.kron(sparse.identity(ny), second_difference(nx, hx))
            + sparse.kron(second_difference(ny, hy), sparse.identity(nx))).tocsc()


def solve_heat(p: HeatParams, t_grid, u0=None) -> SnapshotSet:
    """Crank-Nicolson solution sampled on the uniform ``t_grid`` starting at 0.

    Args:
        p: Coefficient and grid
        t_grid: Snapshot times, t_grid[0] == 0
        u0: Initial interior values overriding the tanh profile

    Returns:
        Discrete-mode SnapshotSet with state dimension nx * ny
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 2 or t_grid[0] != 0.0:
        raise ValueError("t_grid must start at 0 and hold at least 2 points")
    spacing = float(t_grid[1] - t_grid[0])
    dt = spacing if p.dt is None else p.dt
    substeps = max(int(round(spacing / dt)), 1)
    h = spacing / substeps

    u = initial_condition(p) if u0 is None else np.asarray(u0, dtype=float).ravel().copy()
    n = p.grid[0] * p.grid[1]
    if u.shape != (n,):
        raise ValueError(f"initial condition has {u.size} values, grid has {n}")

    L = laplacian(p)
    identity = sparse.identity(n, format='csc')
    explicit = (identity + 0.5 * h * p.D * L).tocsr()
    try:
        implicit = splu((identity - 0.5 * h * p.D * L).tocsc())
    except RuntimeError as e:
        raise SolverError(f"Crank-Nicolson matrix is singular: {e}")

    X = np.empty((n, t_grid.size))
    X[:, 0] = u
    for j in range(1, t_grid.size):
        for _ in range(substeps):
            u = implicit.solve(explicit @ u)
        X[:, j] = u
    logger.debug(f"heat D={p.D:.4f}: {t_grid.size} snapshots, {substeps} substeps each")
    return SnapshotSet.from_trajectory(X, t_grid, DynamicsMode.DISCRETE)
