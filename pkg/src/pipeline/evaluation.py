"""
Relative L2 error statistics of an online model against reference states,
and sweeps over query times and POD truncation thresholds.
"""
import csv
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .offline import OfflineBundle
from .online import OnlineModel, online, predict
from ..models.neural import MlpConfig
from ..models.pod import PodBasis
from ..systems.datasets import Dataset, reference_states
from ..utils.errors import ZeroReferenceError


logger = logging.getLogger("Evaluation")


def relative_error(reference, prediction) -> float:
    """||x - x_hat||_2 / ||x||_2."""
    reference = np.asarray(reference, dtype=float)
    norm = np.linalg.norm(reference)
    if norm == 0.0:
        raise ZeroReferenceError("reference state has zero norm")
    return float(np.linalg.norm(reference - np.asarray(prediction, dtype=float)) / norm)


@dataclass(frozen=True)
class ErrorReport:
    """Per-instance relative errors at one t* with their population mean and std."""

    t_star: float
    mus: np.ndarray  # count x P
    errors: np.ndarray  # count
    mean: float
    std: float
    extrapolated: bool = False
    pod_rank: Optional[int] = None
    stage_residuals: Dict[str, float] = field(default_factory=dict)

    @property
    def count(self) -> int:
        return int(self.errors.size)

    @classmethod
    def from_errors(cls, t_star: float, mus, errors, extrapolated: bool = False,
                    pod_rank: Optional[int] = None, stage_residuals: Optional[Dict[str, float]] = None) -> 'ErrorReport':
        errors = np.asarray(errors, dtype=float)
        if errors.size == 0:
            raise ValueError("error report needs at least one instance")
        mus = np.asarray(mus, dtype=float).reshape(errors.size, -1)
        return cls(float(t_star), mus, errors, float(np.mean(errors)), float(np.std(errors)),
                   bool(extrapolated), pod_rank, dict(stage_residuals or {}))

    def to_dict(self) -> Dict[str, Any]:
        return {
            't_star': self.t_star,
            'mus': self.mus.tolist(),
            'errors': self.errors.tolist(),
            'mean': self.mean,
            'std': self.std,
            'count': self.count,
            'extrapolated': self.extrapolated,
            'pod_rank': self.pod_rank,
            'stage_residuals': self.stage_residuals
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ErrorReport':
        return cls(
            float(data['t_star']),
            np.asarray(data['mus'], dtype=float),
            np.asarray(data['errors'], dtype=float),
            float(data['mean']),
            float(data['std']),
            bool(data.get('extrapolated', False)),
            data.get('pod_rank'),
            data.get('stage_residuals', {})
        )


def evaluate(model: OnlineModel, test: Sequence[Tuple[Any, np.ndarray]]) -> ErrorReport:
    """Errors of ``predict(model, mu_i)`` against the reference state of each test pair."""
    if not test:
        raise ValueError("evaluation needs at least one test instance")
    mus = np.array([np.atleast_1d(np.asarray(mu, dtype=float)) for mu, _ in test])
    references = np.column_stack([np.asarray(x, dtype=float) for _, x in test])
    if references.shape[0] != model.state_dim:
        raise ValueError(f"reference states have dimension {references.shape[0]}, model has {model.state_dim}")
    predictions = predict(model, mus)
    errors = [relative_error(references[:, i], predictions[:, i]) for i in range(len(test))]
    report = ErrorReport.from_errors(model.t_star, mus, errors, model.extrapolated,
                                     None if model.pod is None else model.pod.n, model.stage_residuals)
    logger.info(f"t*={model.t_star:g}: mean relative error {report.mean:.4e}, std {report.std:.4e} "
                f"over {report.count} instances{' (extrapolated)' if report.extrapolated else ''}")
    return report


def evaluate_split(model: OnlineModel, dataset: Dataset) -> ErrorReport:
    """Evaluate against the reference trajectories of a test split."""
    references = reference_states(dataset, model.t_star)
    return evaluate(model, [(mu, references[:, i]) for i, (mu, _) in enumerate(dataset)])


def write_instance_csv(report: ErrorReport, path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow([f"mu{i}" for i in range(report.mus.shape[1])] + ["error"])
        for mu, error in zip(report.mus, report.errors):
            writer.writerow([repr(float(v)) for v in mu] + [repr(float(error))])


def sweep(bundle: OfflineBundle, t_stars: Sequence[float], test: Dataset, x0=None,
          pod_threshold: Optional[float] = None, mlp_config: Optional[MlpConfig] = None,
          mlp_preset: str = "lv", step: Optional[float] = None, workers: int = 1) -> List[ErrorReport]:
    """Repeat online + evaluate over query times."""
    reports = []
    for t_star in t_stars:
        model = online(bundle, float(t_star), x0, pod_threshold, None, mlp_config, mlp_preset, step, workers)
        reports.append(evaluate_split(model, test))
    return reports


def pod_threshold_sweep(bundle: OfflineBundle, t_star: float, thresholds: Sequence[float], test: Dataset,
                        x0=None, mlp_config: Optional[MlpConfig] = None, mlp_preset: str = "pde",
                        step: Optional[float] = None, workers: int = 1) -> List[Tuple[float, ErrorReport]]:
    """Error at a fixed t* for each POD truncation threshold."""
    results = []
    for threshold in thresholds:
        model = online(bundle, t_star, x0, float(threshold), None, mlp_config, mlp_preset, step, workers)
        results.append((float(threshold), evaluate_split(model, test)))
    return results


def write_sweep_csv(reports: Sequence[ErrorReport], path: str,
                    thresholds: Optional[Sequence[float]] = None) -> None:
    """Error-vs-time rows: t_star, mean, std, count, extrapolated, pod_rank[, pod_threshold]."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        header = ["t_star", "mean", "std", "count", "extrapolated", "pod_rank"]
        writer.writerow(header + (["pod_threshold"] if thresholds is not None else []))
        for index, report in enumerate(reports):
            row = [repr(report.t_star), repr(report.mean), repr(report.std), report.count,
                   int(report.extrapolated), "" if report.pod_rank is None else report.pod_rank]
            if thresholds is not None:
                row.append(repr(float(thresholds[index])))
            writer.writerow(row)


def energy_curve(basis: PodBasis) -> np.ndarray:
    """Rows (n, captured energy, projection error of the generating matrix) for every rank."""
    energy = basis.energy
    error = np.sqrt(np.clip(1.0 - energy, 0.0, None))
    return np.column_stack([np.arange(1, energy.size + 1), energy, error])


def write_energy_csv(basis: PodBasis, path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(["n", "energy", "projection_error"])
        for n, energy, error in energy_curve(basis):
            writer.writerow([int(n), repr(float(energy)), repr(float(error))])
