"""
Kernel functions and batched kernel-matrix evaluation.

Matrices follow the snapshot convention: columns are samples, so
``evaluate_matrix(spec, A, B)[i, j] == evaluate(spec, A[:, i], B[:, j])``.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict

import numpy as np
from scipy.spatial.distance import cdist


class KernelKind(Enum):
    """Supported kernel families."""
    LINEAR = "linear"
    POLYNOMIAL = "polynomial"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class KernelSpec:
    """Immutable kernel description.

    ``degree`` and ``offset`` apply to the polynomial kernel
    (offset + <a, b>)^degree; ``lengthscale`` to the Gaussian kernel.
    """

    kind: KernelKind = KernelKind.LINEAR
    degree: int = 2
    offset: float = 1.0
    lengthscale: float = 1.0

    def __post_init__(self):
        if not isinstance(self.kind, KernelKind):
            object.__setattr__(self, 'kind', KernelKind(self.kind))
        if int(self.degree) != self.degree or self.degree < 1:
            raise ValueError(f"polynomial degree must be a positive integer, got {self.degree}")
        if not np.isfinite(self.offset) or self.offset < 0:
            raise ValueError(f"polynomial offset must be >= 0, got {self.offset}")
        if not np.isfinite(self.lengthscale) or self.lengthscale <= 0:
            raise ValueError(f"gaussian lengthscale must be > 0, got {self.lengthscale}")
        object.__setattr__(self, 'degree', int(self.degree))
        object.__setattr__(self, 'offset', float(self.offset))
        object.__setattr__(self, 'lengthscale', float(self.lengthscale))

    @classmethod
    def linear(cls) -> 'KernelSpec':
        return cls(KernelKind.LINEAR)

    @classmethod
    def polynomial(cls, degree: int = 2, offset: float = 1.0) -> 'KernelSpec':
        return cls(KernelKind.POLYNOMIAL, degree=degree, offset=offset)

    @classmethod
    def quadratic(cls) -> 'KernelSpec':
        return cls.polynomial(2, 1.0)

    @classmethod
    def gaussian(cls, lengthscale: float = 1.0) -> 'KernelSpec':
        return cls(KernelKind.GAUSSIAN, lengthscale=lengthscale)

    @classmethod
    def parse(cls, text: str) -> 'KernelSpec':
        """Parse a command-line kernel description.

        Accepted forms: ``linear``, ``quadratic``, ``polynomial[:degree[:offset]]``,
        ``gaussian[:lengthscale]``.
        """
        name, *args = text.strip().lower().split(':')
        try:
            if name == 'linear' and not args:
                return cls.linear()
            if name == 'quadratic' and not args:
                return cls.quadratic()
            if name in ('polynomial', 'poly') and len(args) <= 2:
                degree = int(args[0]) if args else 2
                offset = float(args[1]) if len(args) > 1 else 1.0
                return cls.polynomial(degree, offset)
            if name in ('gaussian', 'rbf') and len(args) <= 1:
                return cls.gaussian(float(args[0]) if args else 1.0)
        except (TypeError, ValueError) as e:
            raise ValueError(f"invalid kernel specification '{text}': {e}")
        raise ValueError(f"invalid kernel specification '{text}'")

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kind': self.kind.value,
            'degree': self.degree,
            'offset': self.offset,
            'lengthscale': self.lengthscale
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'KernelSpec':
        return cls(
            KernelKind(data['kind']),
            degree=data.get('degree', 2),
            offset=data.get('offset', 1.0),
            lengthscale=data.get('lengthscale', 1.0)
        )


def _as_finite(array, name: str, ndim: int) -> np.ndarray:
    array = np.asarray(array, dtype=float)
    if array.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {array.shape}")
    if array.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{name} contains non-finite entries")
    return array


def evaluate(spec: KernelSpec, a, b) -> float:
    """Kernel value k(a, b) for two state vectors."""
    a = _as_finite(a, 'a', 1)
    b = _as_finite(b, 'b', 1)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    if spec.kind is KernelKind.LINEAR:
        return float(np.dot(a, b))
    if spec.kind is KernelKind.POLYNOMIAL:
        return float((spec.offset + np.dot(a, b)) ** spec.degree)
    diff = a - b
    return float(np.exp(-np.dot(diff, diff) / (2.0 * spec.lengthscale ** 2)))


def evaluate_matrix(spec: KernelSpec, A, B) -> np.ndarray:
    """Kernel matrix k(A, B) of shape (p, q) for A (N x p) and B (N x q)."""
    A = _as_finite(A, 'A', 2)
    B = _as_finite(B, 'B', 2)
    if A.shape[0] != B.shape[0]:
        raise ValueError(f"row-dimension mismatch: {A.shape[0]} vs {B.shape[0]}")
    if spec.kind is KernelKind.LINEAR:
        return A.T @ B
    if spec.kind is KernelKind.POLYNOMIAL:
        return (spec.offset + A.T @ B) ** spec.degree
    sq_dist = cdist(A.T, B.T, 'sqeuclidean')
    return np.exp(-sq_dist / (2.0 * spec.lengthscale ** 2))


def evaluate_columns(spec: KernelSpec, A, x) -> np.ndarray:
    """Kernel vector k(A, x) of length p for a single state ``x``."""
    x = _as_finite(x, 'x', 1)
    return evaluate_matrix(spec, A, x[:, None])[:, 0]


def evaluate_diagonal(spec: KernelSpec, A) -> np.ndarray:
    """Self-similarities k(a_j, a_j) for every column of A."""
    A = _as_finite(A, 'A', 2)
    if spec.kind is KernelKind.GAUSSIAN:
        return np.ones(A.shape[1])
    norms = np.einsum('ij,ij->j', A, A)
    if spec.kind is KernelKind.LINEAR:
        return norms
    return (spec.offset + norms) ** spec.degree
