"""
Online stage: states at a queried time t* from the offline surrogates,
optional POD reduction, and the parameter-to-state neural map.
"""
import dataclasses
import logging
import time
from dataclasses import dataclass, field
from multiprocessing import Pool
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .offline import OfflineBundle
from ..models import lando, neural, pod
from ..models.lando import DynamicsMode, LandoModel
from ..models.neural import MlpConfig, NeuralMap
from ..models.pod import PodBasis
from ..utils.benchmarks import StageBenchmark
from ..utils.errors import InstanceError, LandoError


logger = logging.getLogger("Online")

GRID_TOL = 1e-9


def discrete_steps(t_star: float, dt: float) -> int:
    """Number of discrete steps reaching ``t_star``, rounded to the nearest grid point."""
    steps = int(round(t_star / dt))
    if abs(steps * dt - t_star) > GRID_TOL * max(t_star, dt):
        logger.warning(f"t*={t_star} is not on the dt={dt} grid; using {steps} steps (t={steps * dt:.6g})")
    return steps


def _state_at(model: LandoModel, x0: np.ndarray, t_star: float, step: Optional[float], steps: Optional[int]) -> np.ndarray:
    if t_star == 0.0:
        return x0.copy()
    if model.mode is DynamicsMode.CONTINUOUS:
        _, states = lando.integrate(model, x0, t_star, step)
        return states[:, -1]
    return lando.rollout(model, x0, steps)[:, -1]


def _generate_task(args) -> Tuple[np.ndarray, float]:
    mu, model, x0, t_star, step, steps = args
    start = time.perf_counter()
    try:
        state = _state_at(model, x0, t_star, step, steps)
    except (LandoError, ValueError) as e:
        raise InstanceError(mu, e)
    return state, time.perf_counter() - start


def generate_at(bundle: OfflineBundle, t_star: float, x0=None, step: Optional[float] = None,
                workers: int = 1, models: Optional[Sequence[Tuple[np.ndarray, LandoModel]]] = None) -> np.ndarray:
    """State of every surrogate at ``t_star``, one column per parameter instance.

    Args:
        bundle: Offline surrogates
        t_star: Query time, >= 0
        x0: Initial state; defaults to the bundle's recorded training initial state
        step: RK4 step for continuous models; defaults to the training dt
        workers: Worker processes
        models: (mu, model) pairs to use instead of ``bundle.models``

    Returns:
        Matrix N x N_mu
    """
    if not np.isfinite(t_star) or t_star < 0:
        raise ValueError(f"t_star must be >= 0, got {t_star}")
    x0 = resolve_x0(bundle, x0)
    pairs = bundle.models if models is None else models
    step_size = None
    steps = None
    if bundle.mode is DynamicsMode.CONTINUOUS:
        step_size = bundle.dt if step is None else float(step)
        if not step_size > 0:
            raise ValueError(f"integration step must be > 0, got {step_size}")
    elif t_star > 0:
        steps = discrete_steps(t_star, bundle.dt)

    tasks = [(mu, model, x0, float(t_star), step_size, steps) for mu, model in pairs]
    stage = StageBenchmark("Generate", total=len(tasks))
    columns = []
    if workers > 1:
        with Pool(processes=workers) as pool:
            for state, seconds in pool.imap(_generate_task, tasks):
                stage.record(seconds)
                columns.append(state)
    else:
        for task in tasks:
            state, seconds = _generate_task(task)
            stage.record(seconds)
            columns.append(state)
    logger.debug(f"generated {len(columns)} states at t*={t_star}")
    return np.column_stack(columns)


def resolve_x0(bundle: OfflineBundle, x0) -> np.ndarray:
    if x0 is None:
        if bundle.x0 is None:
            raise ValueError("no initial state given and the bundle records none")
        return bundle.x0.copy()
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.shape != (bundle.state_dim,):
        raise ValueError(f"x0 has {x0.size} entries, state dimension is {bundle.state_dim}")
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 contains non-finite entries")
    return x0


@dataclass(frozen=True)
class OnlineModel:
    """Neural map for one t*, with the optional POD basis that lifts its output."""

    t_star: float
    map: NeuralMap
    x0: np.ndarray
    bounds: List[List[float]]
    window: Tuple[float, float]
    pod: Optional[PodBasis] = None
    step: Optional[float] = None
    steps: Optional[int] = None
    extrapolated: bool = False
    stage_residuals: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        expected = self.pod.n if self.pod is not None else self.x0.shape[0]
        if self.map.config.output_dim != expected:
            raise ValueError(f"network output dimension {self.map.config.output_dim} does not match {expected}")

    @property
    def state_dim(self) -> int:
        return self.x0.shape[0]

    @property
    def parameter_dim(self) -> int:
        return self.map.config.input_dim

    def to_dict(self) -> Dict[str, Any]:
        return {
            't_star': self.t_star,
            'map': self.map.to_dict(),
            'x0': self.x0.tolist(),
            'bounds': self.bounds,
            'window': list(self.window),
            'pod': None if self.pod is None else self.pod.to_dict(),
            'step': self.step,
            'steps': self.steps,
            'extrapolated': self.extrapolated,
            'stage_residuals': self.stage_residuals
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'OnlineModel':
        return cls(
            t_star=float(data['t_star']),
            map=NeuralMap.from_dict(data['map']),
            x0=np.asarray(data['x0'], dtype=float),
            bounds=data['bounds'],
            window=tuple(data['window']),
            pod=None if data.get('pod') is None else PodBasis.from_dict(data['pod']),
            step=data.get('step'),
            steps=data.get('steps'),
            extrapolated=bool(data.get('extrapolated', False)),
            stage_residuals=data.get('stage_residuals', {})
        )


def online(bundle: OfflineBundle, t_star: float, x0=None, pod_threshold: Optional[float] = None,
           pod_modes: Optional[int] = None, mlp_config: Optional[MlpConfig] = None, mlp_preset: str = "lv",
           step: Optional[float] = None, workers: int = 1) -> OnlineModel:
    """Build the t* surrogate: generate data, reduce it with POD if asked, train the map.

    Validation targets come from the bundle's validation surrogates; without
    them early stopping monitors the training loss.
    """
    x0 = resolve_x0(bundle, x0)
    extrapolated = t_star > bundle.window[1] * (1.0 + GRID_TOL)
    if extrapolated:
        logger.warning(f"t*={t_star} lies beyond the training window {list(bundle.window)}")

    logger.info(f"Generating {bundle.size} training states at t*={t_star}")
    S_train = generate_at(bundle, t_star, x0, step, workers)
    S_valid = None
    if bundle.validation:
        S_valid = generate_at(bundle, t_star, x0, step, workers, models=bundle.validation)

    basis = None
    projection_error = 0.0
    if pod_threshold is not None or pod_modes is not None:
        basis = pod.compute(S_train, pod_threshold, pod_modes)
        projection_error = basis.projection_error(S_train)
        if basis.n == min(S_train.shape):
            logger.warning(f"POD keeps every one of its {basis.n} modes")
        logger.info(f"POD rank {basis.n}, captured energy {basis.captured_energy:.6f}, "
                    f"projection error {projection_error:.3e}")
        train_targets = basis.project(S_train).T
        valid_targets = None if S_valid is None else basis.project(S_valid).T
    else:
        train_targets = S_train.T
        valid_targets = None if S_valid is None else S_valid.T

    output_dim = train_targets.shape[1]
    if mlp_config is None:
        mlp_config = MlpConfig.from_preset(mlp_preset, bundle.parameter_dim, output_dim)
    else:
        mlp_config = dataclasses.replace(mlp_config, input_dim=bundle.parameter_dim, output_dim=output_dim)

    network = neural.train(bundle.mus, train_targets, mlp_config,
                           bundle.valid_mus if bundle.validation else None, valid_targets, t_star=t_star)

    step_size = None
    steps = None
    if bundle.mode is DynamicsMode.CONTINUOUS:
        step_size = bundle.dt if step is None else float(step)
    elif t_star > 0:
        steps = int(round(t_star / bundle.dt))
    residuals = {
        'fit_residual': float(bundle.fit_residuals.mean()),
        'pod_projection_error': float(projection_error),
        'valid_loss': float(network.best_valid_loss)
    }
    return OnlineModel(float(t_star), network, x0, bundle.bounds, tuple(bundle.window), basis,
                       step_size, steps, bool(extrapolated), residuals)


def predict(model: OnlineModel, mu) -> np.ndarray:
    """Full state at (t*, mu); a 2-D ``mu`` of row vectors gives one column per row."""
    mu = np.asarray(mu, dtype=float)
    batch = np.atleast_2d(mu) if mu.ndim > 0 else mu.reshape(1, 1)
    if model.parameter_dim == 1 and mu.ndim == 1 and mu.size != 1:
        batch = mu[:, None]
    if batch.shape[1] != model.parameter_dim:
        raise ValueError(f"parameter has shape {mu.shape}, model expects {model.parameter_dim} entries")
    bounds = np.asarray(model.bounds, dtype=float)
    outside = np.any((batch < bounds[:, 0]) | (batch > bounds[:, 1]), axis=1)
    if np.any(outside):
        logger.warning(f"{int(outside.sum())} parameter(s) outside the training box {model.bounds}")

    outputs = model.map.forward(batch).T
    states = model.pod.reconstruct(outputs) if model.pod is not None else outputs
    single = mu.ndim == 0 or (mu.ndim == 1 and batch.shape[0] == 1)
    return states[:, 0] if single else states
