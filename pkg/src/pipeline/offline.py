"""
Offline stage: one LANDO surrogate per training parameter instance.
"""
import logging
import time
from dataclasses import dataclass, field
from multiprocessing import Pool
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..models import lando
from ..models.kernels import KernelSpec
from ..models.lando import DynamicsMode, LandoModel, SnapshotSet
from ..utils.benchmarks import StageBenchmark
from ..utils.errors import InstanceError, LandoError


logger = logging.getLogger("Offline")

DT_TOL = 1e-9


@dataclass(frozen=True)
class OfflineBundle:
    """Per-instance surrogates sharing kernel, threshold and mode.

    ``validation`` holds surrogates of the validation instances, fitted the
    same way, so the online stage can build validation targets through the
    LANDO pathway.
    """

    models: List[Tuple[np.ndarray, LandoModel]]
    kernel: KernelSpec
    nu: float
    seed: int
    mode: DynamicsMode
    dt: float
    bounds: List[List[float]]
    window: Tuple[float, float]
    x0: Optional[np.ndarray] = None
    validation: List[Tuple[np.ndarray, LandoModel]] = field(default_factory=list)
    manifest: Dict[str, Any] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.models)

    @property
    def state_dim(self) -> int:
        return self.models[0][1].state_dim

    @property
    def parameter_dim(self) -> int:
        return len(self.models[0][0])

    @property
    def mus(self) -> np.ndarray:
        return np.array([mu for mu, _ in self.models])

    @property
    def valid_mus(self) -> np.ndarray:
        return np.array([mu for mu, _ in self.validation]).reshape(len(self.validation), self.parameter_dim)

    @property
    def fit_residuals(self) -> np.ndarray:
        return np.array([model.fit_residual for _, model in self.models])

    @property
    def dictionary_sizes(self) -> np.ndarray:
        return np.array([model.dictionary.size for _, model in self.models])

    def contains(self, mu) -> bool:
        """Whether ``mu`` lies inside the training parameter box."""
        bounds = np.asarray(self.bounds, dtype=float)
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        return bool(np.all(mu >= bounds[:, 0]) and np.all(mu <= bounds[:, 1]))

    def to_dict(self) -> Dict[str, Any]:
        def encode(pairs):
            return [{'mu': [float(v) for v in mu], 'model': model.to_dict()} for mu, model in pairs]

        return {
            'models': encode(self.models),
            'validation': encode(self.validation),
            'kernel': self.kernel.to_dict(),
            'nu': self.nu,
            'seed': self.seed,
            'mode': self.mode.value,
            'dt': self.dt,
            'bounds': [list(map(float, b)) for b in self.bounds],
            'window': list(self.window),
            'x0': None if self.x0 is None else self.x0.tolist(),
            'manifest': self.manifest
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'OfflineBundle':
        def decode(entries):
            return [(np.asarray(e['mu'], dtype=float), LandoModel.from_dict(e['model'])) for e in entries]

        return cls(
            models=decode(data['models']),
            kernel=KernelSpec.from_dict(data['kernel']),
            nu=float(data['nu']),
            seed=int(data['seed']),
            mode=DynamicsMode(data['mode']),
            dt=float(data['dt']),
            bounds=data['bounds'],
            window=tuple(data['window']),
            x0=None if data.get('x0') is None else np.asarray(data['x0'], dtype=float),
            validation=decode(data.get('validation', [])),
            manifest=data.get('manifest', {})
        )


def _fit_task(args) -> Tuple[LandoModel, float]:
    mu, snapshots, kernel, nu, seed, rcond, jitter_scale = args
    start = time.perf_counter()
    try:
        model = lando.fit(snapshots, kernel, nu, seed, rcond=rcond, jitter_scale=jitter_scale)
    except (LandoError, ValueError) as e:
        raise InstanceError(mu, e)
    return model, time.perf_counter() - start


def _check_consistent(dataset: Sequence[Tuple[Any, SnapshotSet]], name: str) -> None:
    first = dataset[0][1]
    for mu, snapshots in dataset:
        if snapshots.state_dim != first.state_dim:
            raise ValueError(f"{name} instance mu={list(mu)} has state dimension {snapshots.state_dim}, "
                             f"expected {first.state_dim}")
        if snapshots.mode is not first.mode:
            raise ValueError(f"{name} instance mu={list(mu)} has mode {snapshots.mode.value}, "
                             f"expected {first.mode.value}")
        if abs(snapshots.dt - first.dt) > DT_TOL * first.dt:
            raise ValueError(f"{name} instance mu={list(mu)} has dt={snapshots.dt}, expected {first.dt}")


def fit_instances(dataset: Sequence[Tuple[Any, SnapshotSet]], kernel: KernelSpec, nu: float, seed: int,
                  workers: int = 1, rcond: Optional[float] = None, jitter_scale: Optional[float] = None,
                  stage_name: str = "Offline") -> List[Tuple[np.ndarray, LandoModel]]:
    """Fit one model per instance; instance ``i`` uses dictionary seed ``seed + i``."""
    tasks = [(np.atleast_1d(np.asarray(mu, dtype=float)), snapshots, kernel, nu, seed + i, rcond, jitter_scale)
             for i, (mu, snapshots) in enumerate(dataset)]
    stage = StageBenchmark(stage_name, total=len(tasks))
    models = []
    if workers > 1:
        with Pool(processes=workers) as pool:
            for model, seconds in pool.imap(_fit_task, tasks):
                stage.record(seconds)
                models.append(model)
    else:
        for task in tasks:
            model, seconds = _fit_task(task)
            stage.record(seconds)
            models.append(model)
    stage.log_summary()
    return [(task[0], model) for task, model in zip(tasks, models)]


def offline(dataset: Sequence[Tuple[Any, SnapshotSet]], kernel: KernelSpec, nu: float, seed: int,
            validation: Optional[Sequence[Tuple[Any, SnapshotSet]]] = None, workers: int = 1,
            bounds: Optional[List[List[float]]] = None, manifest: Optional[Dict[str, Any]] = None,
            rcond: Optional[float] = None, jitter_scale: Optional[float] = None) -> OfflineBundle:
    """Fit the per-instance LANDO surrogates of the training (and validation) split.

    Args:
        dataset: (mu_i, SnapshotSet) pairs of the training split
        kernel: Kernel shared by every model
        nu: ALD sparsity threshold
        seed: Root dictionary seed
        validation: Optional validation pairs, fitted into ``bundle.validation``
        workers: Worker processes for the per-instance fits
        bounds: Training parameter box; defaults to the bounding box of the mu_i
        manifest: Data provenance recorded in the bundle

    Returns:
        OfflineBundle with one model per training instance
    """
    if not dataset:
        raise ValueError("offline stage needs at least one training instance")
    _check_consistent(dataset, "training")
    if validation:
        _check_consistent(validation, "validation")
        if validation[0][1].state_dim != dataset[0][1].state_dim or validation[0][1].mode is not dataset[0][1].mode:
            raise ValueError("validation split does not match the training split")

    first = dataset[0][1]
    logger.info(f"Fitting {len(dataset)} {first.mode.value} LANDO models "
                f"(kernel {kernel.kind.value}, nu={nu:g}, N={first.state_dim})")
    models = fit_instances(dataset, kernel, nu, seed, workers, rcond, jitter_scale)
    valid_models = []
    if validation:
        valid_models = fit_instances(validation, kernel, nu, seed + len(dataset), workers, rcond,
                                     jitter_scale, stage_name="Offline[valid]")

    mus = np.array([mu for mu, _ in models])
    if bounds is None:
        bounds = np.column_stack([mus.min(axis=0), mus.max(axis=0)]).tolist()
    start_states = [snapshots.X[:, 0] for _, snapshots in dataset]
    x0 = start_states[0].copy() if all(np.array_equal(s, start_states[0]) for s in start_states) else None

    bundle = OfflineBundle(models, kernel, float(nu), int(seed), first.mode, first.dt, bounds,
                           (float(first.times[0]), float(first.times[-1])), x0, valid_models,
                           dict(manifest or {}))
    sizes = bundle.dictionary_sizes
    logger.info(f"Offline stage done: dictionary size mean {sizes.mean():.1f} (range {sizes.min()}-{sizes.max()}), "
                f"mean fit residual {bundle.fit_residuals.mean():.3e}")
    return bundle
