#!/usr/bin/env python3
"""
Benchmark studies for the parametric LANDO framework.

Each study prints the measured quantities next to their thresholds with
PASS/FAIL, plus wall-clock time.
"""
import sys
import os
import argparse
import dataclasses
import logging
import time

import numpy as np

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.models import lando, pod
from src.models.kernels import KernelSpec
from src.models.lando import DynamicsMode, SnapshotSet
from src.pipeline.evaluation import (
    evaluate_split, pod_threshold_sweep, sweep, write_energy_csv, write_sweep_csv
)
from src.pipeline.offline import offline
from src.pipeline.online import generate_at, online
from src.systems.datasets import design_from_study, generate_split
from src.systems.sampling import lhs_sample
from src.utils.config import Config, default_study_config


STUDIES = ['dmd', 'lv', 'lv-init', 'lv-size', 'lv2', 'heat', 'allen-cahn', 'pod-sweep']


class StudyRunner:
    """Runs benchmark studies and collects PASS/FAIL verdicts."""

    def __init__(self, workers: int = 1, out_dir: str = "results", seed: int = 0):
        self.workers = workers
        self.out_dir = out_dir
        self.seed = seed
        self.verdicts = []
        self._cache = {}

    def check(self, label: str, value: float, threshold: float, passed: bool) -> None:
        verdict = "PASS" if passed else "FAIL"
        print(f"  {label:<48s} {value:>12.4e}  (threshold {threshold:.4e})  {verdict}")
        self.verdicts.append((label, passed))

    def datasets(self, system: str, **overrides):
        """Train/valid/test datasets of a system, cached per override set."""
        key = (system, tuple(sorted((k, repr(v)) for k, v in overrides.items())))
        if key not in self._cache:
            study = dataclasses.replace(default_study_config(system), seed=self.seed, **overrides)
            samples = lhs_sample(design_from_study(study))
            self._cache[key] = (study, {split: generate_split(study, split, samples[split], self.workers)
                                        for split in Config.SPLITS})
        return self._cache[key]

    def bundle(self, system: str, **overrides):
        study, data = self.datasets(system, **overrides)
        kernel = KernelSpec.from_dict(study.kernel)
        return study, data, offline(data['train'], kernel, study.nu, study.seed, validation=data['valid'],
                                    workers=self.workers, bounds=study.bounds)

    def csv_path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def run_dmd(self) -> None:
        """Linear discrete system recovered exactly by a linear-kernel model."""
        rng = np.random.default_rng(self.seed)
        n = 4
        Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
        A = Q @ np.diag(rng.uniform(0.5, 0.95, size=n)) @ Q.T
        X = np.empty((n, 30))
        X[:, 0] = rng.normal(size=n)
        for j in range(1, X.shape[1]):
            X[:, j] = A @ X[:, j - 1]
        snapshots = SnapshotSet.from_trajectory(X, np.arange(X.shape[1], dtype=float), DynamicsMode.DISCRETE)
        model = lando.fit(snapshots, KernelSpec.linear(), 1e-12, self.seed)
        x0 = rng.normal(size=n)
        states = lando.rollout(model, x0, 50)
        reference = np.column_stack([np.linalg.matrix_power(A, j) @ x0 for j in range(51)])
        error = float(np.max(np.linalg.norm(states - reference, axis=0) / np.linalg.norm(reference, axis=0)))
        self.check("rollout relative error over 50 steps", error, 1e-6, error <= 1e-6)

    def run_lv(self) -> None:
        study, data, bundle = self.bundle("lv")
        sizes = bundle.dictionary_sizes
        self.check("mean dictionary size", float(sizes.mean()), 12, 3 <= sizes.min() and sizes.max() <= 12)
        reports = sweep(bundle, study.t_stars, data['test'], mlp_preset=study.mlp_preset, workers=self.workers)
        write_sweep_csv(reports, self.csv_path("lv_sweep.csv"))
        for report in reports:
            threshold = 0.03 if report.t_star <= 400 else 0.05
            self.check(f"t*={report.t_star:g} mean relative error", report.mean, threshold, report.mean <= threshold)

    def run_lv_init(self) -> None:
        study, _, bundle = self.bundle("lv")
        shifted, data = self.datasets("lv", x0=[70.0, 20.0])
        reports = sweep(bundle, study.t_stars, data['test'], x0=shifted.x0, mlp_preset=study.mlp_preset,
                        workers=self.workers)
        write_sweep_csv(reports, self.csv_path("lv_init_sweep.csv"))
        for report in reports:
            threshold = 0.03 if report.t_star <= 400 else 0.05
            self.check(f"x0=[70,20] t*={report.t_star:g} mean error", report.mean, threshold,
                       report.mean <= threshold)

    def run_lv_size(self) -> None:
        errors = {}
        for n_train in (50, 150):
            counts = {"train": n_train, "valid": 50, "test": 100}
            study, data, bundle = self.bundle("lv", counts=counts)
            model = online(bundle, 600.0, mlp_preset=study.mlp_preset, workers=self.workers)
            errors[n_train] = evaluate_split(model, data['test']).mean
            print(f"  N_mu={n_train}: mean error at t*=600 {errors[n_train]:.4e}")
        self.check("error(N_mu=50) - error(N_mu=150)", errors[50] - errors[150], 0.0, errors[50] > errors[150])

    def run_lv2(self) -> None:
        study, data, bundle = self.bundle("lv2")
        reports = sweep(bundle, study.t_stars, data['test'], mlp_preset=study.mlp_preset, workers=self.workers)
        write_sweep_csv(reports, self.csv_path("lv2_sweep.csv"))
        for report in reports:
            threshold = 0.03 if report.t_star <= 400 else 0.05
            self.check(f"t*={report.t_star:g} mean relative error", report.mean, threshold, report.mean <= threshold)

    def run_heat(self) -> None:
        study, data, bundle = self.bundle("heat")
        reports = sweep(bundle, study.t_stars, data['test'], pod_threshold=study.pod_threshold,
                        mlp_preset=study.mlp_preset, workers=self.workers)
        write_sweep_csv(reports, self.csv_path("heat_sweep.csv"))
        ranks = [report.pod_rank for report in reports]
        self.check("max POD rank", max(ranks), 6, max(ranks) <= 6)
        for report in reports:
            self.check(f"t*={report.t_star:g} mean relative error", report.mean, 0.02, report.mean <= 0.02)
        S = generate_at(bundle, 1.0, workers=self.workers)
        write_energy_csv(pod.compute(S, 1.0), self.csv_path("heat_energy.csv"))

    def run_allen_cahn(self) -> None:
        study, data, bundle = self.bundle("allen-cahn")
        reports = sweep(bundle, study.t_stars, data['test'], pod_threshold=study.pod_threshold,
                        mlp_preset=study.mlp_preset, workers=self.workers)
        write_sweep_csv(reports, self.csv_path("allen_cahn_sweep.csv"))
        ranks = [report.pod_rank for report in reports]
        self.check("median POD rank", float(np.median(ranks)), 14, 6 <= np.median(ranks) <= 14)
        inside = [r for r in reports if r.t_star <= 0.8 + 1e-12]
        beyond = [r for r in reports if r.t_star > 0.8 + 1e-12]
        for report in inside:
            self.check(f"t*={report.t_star:g} mean relative error", report.mean, 0.05, report.mean <= 0.05)
        if beyond:
            growth = beyond[-1].mean - inside[-1].mean
            self.check("error growth beyond t*=0.8", growth, 0.0, growth > 0)

    def run_pod_sweep(self) -> None:
        study, data, bundle = self.bundle("heat")
        thresholds = [0.9999, 0.99999, 0.999999]
        results = pod_threshold_sweep(bundle, 1.0, thresholds, data['test'], mlp_preset=study.mlp_preset,
                                      workers=self.workers)
        write_sweep_csv([report for _, report in results], self.csv_path("pod_sweep.csv"), thresholds)
        base = results[0][1].mean
        for threshold, report in results[1:]:
            change = abs(report.mean - base) / base
            self.check(f"threshold {threshold:g} relative change in error", change, 0.2, change < 0.2)


def main():
    """Main entry point."""
    parser = argparse.ArgumentParser(description="Parametric LANDO benchmark studies")
    parser.add_argument(
        '--study',
        choices=STUDIES + ['all'],
        default='dmd',
        help='Which study to run'
    )
    parser.add_argument('--workers', type=int, default=Config.WORKERS, help='Worker processes')
    parser.add_argument('--seed', type=int, default=0, help='Root seed')
    parser.add_argument('--out', default='results', help='Directory for CSV outputs')
    parser.add_argument('--verbose', action='store_true')

    args = parser.parse_args()
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=Config.LOG_FORMAT)

    runner = StudyRunner(args.workers, args.out, args.seed)
    selected = STUDIES if args.study == 'all' else [args.study]
    for name in selected:
        print("\n" + "=" * 60)
        print(f"STUDY {name.upper()}")
        print("=" * 60)
        start = time.perf_counter()
        getattr(runner, f"run_{name.replace('-', '_')}")()
        print(f"  wall clock {time.perf_counter() - start:.1f}s")

    failed = [label for label, passed in runner.verdicts if not passed]
    print("\n" + "=" * 60)
    print(f"STUDIES COMPLETE: {len(runner.verdicts) - len(failed)} passed, {len(failed)} failed")
    print("=" * 60)
    return 1 if failed else 0


if __name__ == '__main__':
    sys.exit(main())
