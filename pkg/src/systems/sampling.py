"""
Latin hypercube designs over a box of parameters.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..utils.config import Config


logger = logging.getLogger("Sampling")


@dataclass(frozen=True)
class ParameterDesign:
    """Parameter box, per-split sample counts and the root seed."""

    bounds: Tuple[Tuple[float, float], ...]
    counts: Dict[str, int] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        bounds = tuple((float(low), float(high)) for low, high in self.bounds)
        if not bounds:
            raise ValueError("parameter design needs at least one dimension")
        for low, high in bounds:
            if not (np.isfinite(low) and np.isfinite(high)) or not low < high:
                raise ValueError(f"degenerate parameter bounds [{low}, {high}]")
        for split, count in self.counts.items():
            if count < 1:
                raise ValueError(f"counts['{split}'] must be >= 1, got {count}")
        object.__setattr__(self, 'bounds', bounds)

    @property
    def dim(self) -> int:
        return len(self.bounds)

    @property
    def lower(self) -> np.ndarray:
        return np.array([low for low, _ in self.bounds])

    @property
    def upper(self) -> np.ndarray:
        return np.array([high for _, high in self.bounds])

    def contains(self, mu, tol: float = 0.0) -> bool:
        """Whether ``mu`` lies inside the box (widened by ``tol`` times its width)."""
        mu = np.asarray(mu, dtype=float)
        width = self.upper - self.lower
        return bool(np.all(mu >= self.lower - tol * width) and np.all(mu <= self.upper + tol * width))


def latin_hypercube(n_samples: int, bounds: Sequence[Tuple[float, float]],
                    rng: np.random.Generator) -> np.ndarray:
    """One LHS design: every dimension fills each of its ``n_samples`` strata once.

    Returns:
        Array of shape (n_samples, dim)
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    bounds = np.asarray(bounds, dtype=float)
    dim = bounds.shape[0]
    strata = np.stack([rng.permutation(n_samples) for _ in range(dim)], axis=1)
    unit = (strata + rng.uniform(size=(n_samples, dim))) / n_samples
    return bounds[:, 0] + unit * (bounds[:, 1] - bounds[:, 0])


def split_seed(seed: int, split: str) -> int:
    """Seed of one split's design, derived from the root seed."""
    index = Config.SPLITS.index(split) if split in Config.SPLITS else len(Config.SPLITS)
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def lhs_sample(design: ParameterDesign) -> Dict[str, np.ndarray]:
    """Independent LHS design per split.

    Returns:
        Mapping split name -> (count, dim) array of parameter vectors
    """
    samples = {}
    for split, count in design.counts.items():
        rng = np.random.default_rng(split_seed(design.seed, split))
        samples[split] = latin_hypercube(count, design.bounds, rng)

    seen: List[np.ndarray] = []
    for split, values in samples.items():
        for other in seen:
            if np.any((values[:, None, :] == other[None, :, :]).all(axis=2)):
                raise ValueError(f"split '{split}' shares a parameter vector with another split")
        seen.append(values)
    logger.debug(f"LHS design {({split: len(v) for split, v in samples.items()})} over {design.dim} dims")
    return samples
