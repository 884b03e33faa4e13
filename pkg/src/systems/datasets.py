"""
Parametric snapshot datasets: generation from a study configuration and
CSV/manifest export and import.

A dataset is a list of (mu, SnapshotSet) pairs, one per parameter instance.
"""
import json
import logging
import os
import time
from multiprocessing import Pool
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .allen_cahn import AllenCahnParams, solve_allen_cahn
from .heat import HeatParams, solve_heat
from .lotka_volterra import LotkaVolterraParams, solve_lotka_volterra
from .sampling import ParameterDesign, lhs_sample
from ..models.lando import DynamicsMode, SnapshotSet
from ..utils.benchmarks import StageBenchmark
from ..utils.config import Config, StudyConfig
from ..utils.errors import InstanceError, LandoError


logger = logging.getLogger("Datasets")

Dataset = List[Tuple[np.ndarray, SnapshotSet]]


def design_from_study(study: StudyConfig) -> ParameterDesign:
    return ParameterDesign(tuple(tuple(b) for b in study.bounds),
                           {split: study.counts[split] for split in Config.SPLITS}, study.seed)


def time_grid(study: StudyConfig, split: str) -> np.ndarray:
    """Training window for train/valid, reference window for test."""
    if split == "test":
        return np.linspace(0.0, study.test_t_end, study.test_n_snapshots)
    return np.linspace(0.0, study.t_end, study.n_snapshots)


def solve_instance(study: StudyConfig, mu, t_grid, x0=None) -> SnapshotSet:
    """Reference trajectory of one parameter instance."""
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (study.parameter_dim,):
        raise ValueError(f"parameter has shape {mu.shape}, study has {study.parameter_dim} dimensions")
    fixed = study.fixed
    if study.system in ("lv", "lv2"):
        coefficients = {k: v for k, v in fixed.items() if k in ("beta", "gamma", "delta")}
        coefficients['alpha'] = mu[0]
        if study.system == "lv2":
            coefficients['beta'] = mu[1]
        start = study.x0 if x0 is None else x0
        return solve_lotka_volterra(LotkaVolterraParams(**coefficients), start, t_grid,
                                    exact_targets=study.targets == "exact")
    if study.system == "heat":
        params = HeatParams(mu[0], alpha_ic=fixed.get("alpha_ic", 0.6),
                            grid=tuple(study.grid), dt=study.solver_dt)
        return solve_heat(params, t_grid)
    params = AllenCahnParams(mu[0], mu[1], nx=int(study.grid),
                             dt=study.solver_dt if study.solver_dt else 1e-4)
    return solve_allen_cahn(params, t_grid)


def _solve_task(args) -> Tuple[SnapshotSet, float]:
    study, mu, t_grid = args
    start = time.perf_counter()
    try:
        snapshots = solve_instance(study, mu, t_grid)
    except (LandoError, ValueError) as e:
        raise InstanceError(mu, e)
    return snapshots, time.perf_counter() - start


def generate_split(study: StudyConfig, split: str, mus: np.ndarray, workers: int = 1) -> Dataset:
    """Solve every parameter instance of one split, in parallel when ``workers`` > 1."""
    t_grid = time_grid(study, split)
    tasks = [(study, mu, t_grid) for mu in mus]
    stage = StageBenchmark(f"Generate[{split}]", total=len(tasks))
    results = []
    if workers > 1:
        with Pool(processes=workers) as pool:
            for snapshots, seconds in pool.imap(_solve_task, tasks):
                stage.record(seconds)
                results.append(snapshots)
    else:
        for task in tasks:
            snapshots, seconds = _solve_task(task)
            stage.record(seconds)
            results.append(snapshots)
    stage.log_summary()
    return [(np.asarray(mu, dtype=float), snapshots) for mu, snapshots in zip(mus, results)]


def generate_dataset(study: StudyConfig, workers: int = 1) -> Dict[str, Dataset]:
    """LHS design plus reference solves for the train, valid and test splits."""
    samples = lhs_sample(design_from_study(study))
    datasets = {}
    for split in Config.SPLITS:
        logger.info(f"Generating {split} split: {len(samples[split])} instances of '{study.system}'")
        datasets[split] = generate_split(study, split, samples[split], workers)
    return datasets


def write_split(root: str, split: str, study: StudyConfig, dataset: Dataset) -> str:
    """Write one CSV per instance plus the split manifest; returns the split directory."""
    directory = os.path.join(root, split)
    os.makedirs(directory, exist_ok=True)
    instances = []
    for index, (mu, snapshots) in enumerate(dataset):
        name = f"instance_{index:04d}"
        header = ",".join(["t"] + [f"x{i}" for i in range(snapshots.state_dim)])
        table = np.column_stack([snapshots.times, snapshots.X.T])
        np.savetxt(os.path.join(directory, f"{name}.csv"), table, delimiter=",",
                   header=header, comments="", fmt="%.17g")
        entry = {'file': f"{name}.csv", 'mu': [float(v) for v in mu]}
        if snapshots.mode is DynamicsMode.CONTINUOUS and study.targets == "exact":
            targets = np.column_stack([snapshots.times, snapshots.Y.T])
            np.savetxt(os.path.join(directory, f"{name}_targets.csv"), targets, delimiter=",",
                       header=header, comments="", fmt="%.17g")
            entry['targets_file'] = f"{name}_targets.csv"
        instances.append(entry)

    first = dataset[0][1]
    manifest = {
        'system': study.system,
        'split': split,
        'bounds': study.bounds,
        'seed': study.seed,
        'mode': first.mode.value,
        'state_dim': first.state_dim,
        'grid': study.grid,
        'fixed': study.fixed,
        'x0': study.x0,
        'targets': study.targets,
        'times': {'t0': float(first.times[0]), 't_end': float(first.times[-1]), 'n': int(first.times.size)},
        'instances': instances
    }
    with open(os.path.join(directory, Config.MANIFEST_FILE), 'w') as f:
        json.dump(manifest, f, indent=2)
    return directory


def write_dataset(root: str, study: StudyConfig, datasets: Dict[str, Dataset]) -> None:
    for split, dataset in datasets.items():
        directory = write_split(root, split, study, dataset)
        logger.info(f"Wrote {len(dataset)} instances to {directory}")


def read_split(directory: str) -> Tuple[Dict[str, Any], Dataset]:
    """Load a split written by ``write_split``; returns (manifest, dataset)."""
    path = os.path.join(directory, Config.MANIFEST_FILE)
    if not os.path.exists(path):
        raise ValueError(f"no {Config.MANIFEST_FILE} in '{directory}'")
    with open(path, 'r') as f:
        manifest = json.load(f)
    mode = DynamicsMode(manifest['mode'])
    dataset = []
    for entry in manifest['instances']:
        table = np.loadtxt(os.path.join(directory, entry['file']), delimiter=",", skiprows=1, ndmin=2)
        Y = None
        if 'targets_file' in entry:
            Y = np.loadtxt(os.path.join(directory, entry['targets_file']), delimiter=",",
                           skiprows=1, ndmin=2)[:, 1:].T
        snapshots = SnapshotSet.from_trajectory(table[:, 1:].T, table[:, 0], mode, Y)
        dataset.append((np.asarray(entry['mu'], dtype=float), snapshots))
    if not dataset:
        raise ValueError(f"split '{directory}' holds no instances")
    return manifest, dataset


def reference_states(dataset: Dataset, t_star: float) -> np.ndarray:
    """Reference states at ``t_star`` as columns, interpolating linearly between grid points."""
    columns = []
    warned = False
    for _, snapshots in dataset:
        times = snapshots.times
        if not times[0] <= t_star <= times[-1] + 1e-12 * max(abs(times[-1]), 1.0):
            raise ValueError(f"t*={t_star} outside the reference window [{times[0]}, {times[-1]}]")
        position = (t_star - times[0]) / snapshots.dt
        index = int(round(position))
        if abs(position - index) <= 1e-9:
            columns.append(snapshots.X[:, min(index, times.size - 1)])
            continue
        if not warned:
            logger.warning(f"t*={t_star} falls between reference snapshots; interpolating")
            warned = True
        low = min(int(np.floor(position)), times.size - 2)
        weight = position - low
        columns.append((1.0 - weight) * snapshots.X[:, low] + weight * snapshots.X[:, low + 1])
    return np.column_stack(columns)


def default_x0(dataset: Dataset) -> Optional[np.ndarray]:
    """Initial state shared by every instance of ``dataset``, if there is one."""
    first = dataset[0][1].X[:, 0]
    if all(np.array_equal(snapshots.X[:, 0], first) for _, snapshots in dataset):
        return first.copy()
    return None
