"""
Lotka-Volterra predator-prey reference solver.

    dx1/dt = alpha x1 - beta x1 x2
    dx2/dt = delta x1 x2 - gamma x2
"""
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from ..models.lando import DynamicsMode, SnapshotSet
from ..utils.errors import SolverError


RTOL = 1e-9
ATOL = 1e-9


@dataclass(frozen=True)
class LotkaVolterraParams:
    """Prey growth alpha, predation beta, predator death gamma, predator growth delta."""

    alpha: float
    beta: float = 0.002
    gamma: float = 0.2
    delta: float = 0.0025

    def __post_init__(self):
        for name in ('alpha', 'beta', 'gamma', 'delta'):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {value}")


def rhs(p: LotkaVolterraParams, x) -> np.ndarray:
    """Right-hand side at one state or at the columns of a 2 x Nt matrix."""
    x = np.asarray(x, dtype=float)
    prey, predator = x[0], x[1]
    return np.array([
        p.alpha * prey - p.beta * prey * predator,
        p.delta * prey * predator - p.gamma * predator
    ])


def first_integral(p: LotkaVolterraParams, x) -> np.ndarray:
    """Conserved quantity delta x1 - gamma ln x1 + beta x2 - alpha ln x2."""
    x = np.asarray(x, dtype=float)
    return p.delta * x[0] - p.gamma * np.log(x[0]) + p.beta * x[1] - p.alpha * np.log(x[1])


def solve_lotka_volterra(p: LotkaVolterraParams, x0, t_grid, exact_targets: bool = True) -> SnapshotSet:
    """Integrate with adaptive RK45 and sample the trajectory on ``t_grid``.

    Args:
        p: Model coefficients
        x0: Initial populations, both > 0
        t_grid: Uniform output grid; integration starts at t_grid[0]
        exact_targets: Use the right-hand side at the solution states as targets,
            otherwise derive them by finite differences

    Returns:
        Continuous-mode SnapshotSet
    """
    x0 = np.asarray(x0, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    if x0.shape != (2,) or np.any(x0 <= 0) or not np.all(np.isfinite(x0)):
        raise ValueError(f"x0 must hold two positive populations, got {x0}")
    if t_grid.ndim != 1 or t_grid.size < 3:
        raise ValueError("t_grid needs at least 3 points")

    solution = solve_ivp(lambda t, x: rhs(p, x), (t_grid[0], t_grid[-1]), x0,
                         method='RK45', t_eval=t_grid, rtol=RTOL, atol=ATOL)
    if not solution.success:
        raise SolverError(f"Lotka-Volterra integration failed: {solution.message}")
    X = solution.y
    Y = rhs(p, X) if exact_targets else None
    return SnapshotSet.from_trajectory(X, t_grid, DynamicsMode.CONTINUOUS, Y)
