#!/usr/bin/env python3
"""
Command-line entry point of the parametric LANDO framework.

Subcommands cover the offline/online workflow: generate reference data,
fit per-instance surrogates, train the t* map, predict, evaluate and sweep.
"""
import argparse
import logging
import os
import sys
from typing import Optional

import numpy as np

from src.models.kernels import KernelSpec
from src.models.neural import MlpConfig
from src.pipeline.evaluation import (
    evaluate_split, pod_threshold_sweep, sweep, write_energy_csv, write_instance_csv, write_sweep_csv
)
from src.pipeline.offline import OfflineBundle, offline
from src.pipeline.online import OnlineModel, generate_at, online, predict
from src.models import pod
from src.systems.datasets import generate_dataset, read_split, write_dataset
from src.utils.config import SYSTEMS, Config, StudyConfig, default_study_config, load_study_config
from src.utils.errors import LandoError
from src.utils.protocol import Artifact, ArtifactType


logger = logging.getLogger("Main")

DEFAULT_NU = 1e-6


def parse_floats(text: str):
    return [float(value) for value in text.replace(';', ',').split(',') if value.strip()]


def parse_x0(text):
    """Initial state from a comma-separated list or a CSV file of values."""
    if text is None:
        return None
    if os.path.exists(text):
        return np.loadtxt(text, delimiter=",", ndmin=1).ravel()
    return np.asarray(parse_floats(text), dtype=float)


def load_study(args) -> StudyConfig:
    if getattr(args, 'config', None):
        study = load_study_config(args.config)
        if getattr(args, 'system', None) and args.system != study.system:
            raise ValueError(f"--system {args.system} disagrees with config system '{study.system}'")
        return study
    if getattr(args, 'system', None):
        return default_study_config(args.system)
    raise ValueError("either --system or --config is required")


def study_for(args, system: Optional[str]) -> Optional[StudyConfig]:
    """Study settings from --config, else the defaults of the data's system."""
    if getattr(args, 'config', None):
        return load_study_config(args.config)
    if system in SYSTEMS:
        return default_study_config(system)
    return None


def online_settings(args, study: Optional[StudyConfig]):
    """MLP preset, MLP overrides and POD threshold; flags take precedence over the study."""
    preset = args.mlp_preset or (study.mlp_preset if study else 'lv')
    pod_threshold = args.pod_threshold
    if pod_threshold is None and study is not None:
        pod_threshold = study.pod_threshold
    mlp_config = None
    if study is not None and study.mlp:
        mlp_config = MlpConfig(input_dim=1, output_dim=1, **{**Config.MLP_PRESETS[preset], **study.mlp})
    return preset, pod_threshold, mlp_config


def cmd_generate_data(args) -> None:
    study = load_study(args)
    datasets = generate_dataset(study, workers=args.workers)
    write_dataset(args.out, study, datasets)


def cmd_offline(args) -> None:
    manifest, train = read_split(os.path.join(args.data, "train"))
    validation = None
    valid_dir = os.path.join(args.data, "valid")
    if os.path.exists(os.path.join(valid_dir, Config.MANIFEST_FILE)):
        _, validation = read_split(valid_dir)
    study = study_for(args, manifest.get('system'))
    if args.kernel:
        kernel = KernelSpec.parse(args.kernel)
    else:
        kernel = KernelSpec.from_dict(study.kernel) if study else KernelSpec.linear()
    nu = args.nu if args.nu is not None else (study.nu if study else DEFAULT_NU)
    bundle = offline(train, kernel, nu, args.seed, validation=validation,
                     workers=args.workers, bounds=manifest.get('bounds'),
                     manifest={k: manifest[k] for k in ('system', 'seed', 'grid', 'fixed') if k in manifest})
    Artifact(ArtifactType.OFFLINE_BUNDLE, bundle.to_dict()).write(args.out)
    logger.info(f"Bundle of {bundle.size} models written to {args.out}")


def cmd_online(args) -> None:
    bundle = OfflineBundle.from_dict(Artifact.read(args.bundle, ArtifactType.OFFLINE_BUNDLE).data)
    study = study_for(args, bundle.manifest.get('system'))
    t_star = args.t_star
    if t_star is None:
        if study is None or len(study.t_stars) != 1:
            raise ValueError("--t-star is required unless the study lists exactly one t*")
        t_star = study.t_stars[0]
    preset, pod_threshold, mlp_config = online_settings(args, study)
    model = online(bundle, t_star, parse_x0(args.x0), pod_threshold, args.pod_modes,
                   mlp_config, preset, args.step, args.workers)
    Artifact(ArtifactType.ONLINE_MODEL, model.to_dict()).write(args.out)
    if args.energy_csv and model.pod is not None:
        write_energy_csv(model.pod, args.energy_csv)
    logger.info(f"Online model for t*={t_star} written to {args.out}")


def cmd_predict(args) -> None:
    model = OnlineModel.from_dict(Artifact.read(args.model, ArtifactType.ONLINE_MODEL).data)
    state = predict(model, np.asarray(parse_floats(args.mu), dtype=float))
    print(",".join(repr(float(value)) for value in state))


def cmd_evaluate(args) -> None:
    model = OnlineModel.from_dict(Artifact.read(args.model, ArtifactType.ONLINE_MODEL).data)
    _, test = read_split(args.test)
    report = evaluate_split(model, test)
    Artifact(ArtifactType.ERROR_REPORT, report.to_dict()).write(args.report)
    csv_path = args.csv or os.path.splitext(args.report)[0] + "_instances.csv"
    write_instance_csv(report, csv_path)
    print(f"t*={report.t_star:g} mean={report.mean:.6e} std={report.std:.6e} count={report.count}")


def cmd_sweep(args) -> None:
    bundle = OfflineBundle.from_dict(Artifact.read(args.bundle, ArtifactType.OFFLINE_BUNDLE).data)
    _, test = read_split(args.test)
    study = study_for(args, bundle.manifest.get('system'))
    t_stars = args.t_stars or (study.t_stars if study else [])
    if not t_stars:
        raise ValueError("--t-stars is required when the study lists no t* values")
    x0 = parse_x0(args.x0)
    preset, pod_threshold, mlp_config = online_settings(args, study)
    if args.pod_thresholds:
        if len(t_stars) != 1:
            raise ValueError("a POD threshold sweep takes exactly one t* value")
        thresholds = parse_floats(args.pod_thresholds)
        results = pod_threshold_sweep(bundle, t_stars[0], thresholds, test, x0, mlp_config,
                                      preset, args.step, args.workers)
        write_sweep_csv([report for _, report in results], args.out, thresholds)
        if args.energy_csv:
            S = generate_at(bundle, t_stars[0], x0, args.step, args.workers)
            write_energy_csv(pod.compute(S, 1.0), args.energy_csv)
    else:
        reports = sweep(bundle, t_stars, test, x0, pod_threshold, mlp_config,
                        preset, args.step, args.workers)
        write_sweep_csv(reports, args.out)
    logger.info(f"Sweep written to {args.out}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Parametric LANDO surrogate modelling")
    parser.add_argument('--verbose', action='store_true', help='Enable debug logging')
    parser.add_argument('--workers', type=int, default=Config.WORKERS,
                        help='Worker processes for per-instance stages (default: %(default)s)')
    commands = parser.add_subparsers(dest='command', required=True)

    generate = commands.add_parser('generate-data', help='Sample parameters and run the reference solvers')
    generate.add_argument('--system', choices=['lv', 'lv2', 'heat', 'allen-cahn'])
    generate.add_argument('--config', help='JSON study configuration')
    generate.add_argument('--out', required=True, help='Output directory')
    generate.set_defaults(handler=cmd_generate_data)

    fit = commands.add_parser('offline', help='Fit one LANDO model per training instance')
    fit.add_argument('--data', required=True, help='Directory written by generate-data')
    fit.add_argument('--kernel', help='linear | quadratic | polynomial:d[:c] | gaussian[:l] (default: from the study)')
    fit.add_argument('--nu', type=float, default=None, help='ALD sparsity threshold (default: from the study)')
    fit.add_argument('--config', help='JSON study configuration supplying kernel and nu')
    fit.add_argument('--seed', type=int, default=0)
    fit.add_argument('--out', required=True, help='Bundle file')
    fit.set_defaults(handler=cmd_offline)

    def add_online_options(sub):
        sub.add_argument('--x0', help='Initial state: comma-separated values or a CSV file')
        sub.add_argument('--pod-threshold', type=float, default=None)
        sub.add_argument('--mlp-preset', choices=sorted(Config.MLP_PRESETS), default=None,
                         help='Network preset (default: from the study)')
        sub.add_argument('--config', help='JSON study configuration (default: the bundle system defaults)')
        sub.add_argument('--step', type=float, default=None, help='RK4 step (continuous models)')
        sub.add_argument('--energy-csv', help='Write the POD energy curve here')

    train = commands.add_parser('online', help='Train the parameter-to-state map at t*')
    train.add_argument('--bundle', required=True)
    train.add_argument('--t-star', type=float, default=None)
    train.add_argument('--pod-modes', type=int, default=None, help='Fixed POD rank')
    train.add_argument('--out', required=True, help='Model file')
    add_online_options(train)
    train.set_defaults(handler=cmd_online)

    query = commands.add_parser('predict', help='Predict the state at (t*, mu)')
    query.add_argument('--model', required=True)
    query.add_argument('--mu', required=True, help='Comma-separated parameter values')
    query.set_defaults(handler=cmd_predict)

    score = commands.add_parser('evaluate', help='Relative errors against a test split')
    score.add_argument('--model', required=True)
    score.add_argument('--test', required=True, help='Test split directory')
    score.add_argument('--report', required=True, help='Report file')
    score.add_argument('--csv', help='Per-instance CSV (default: next to the report)')
    score.set_defaults(handler=cmd_evaluate)

    repeat = commands.add_parser('sweep', help='Error versus t* (or versus POD threshold)')
    repeat.add_argument('--bundle', required=True)
    repeat.add_argument('--test', required=True, help='Test split directory')
    repeat.add_argument('--t-stars', type=parse_floats, default=None,
                        help='Comma-separated query times (default: the study t* values)')
    repeat.add_argument('--pod-thresholds', help='Comma-separated thresholds for a POD sweep at one t*')
    repeat.add_argument('--out', required=True, help='Sweep CSV')
    add_online_options(repeat)
    repeat.set_defaults(handler=cmd_sweep)
    return parser


def main(argv=None) -> int:
    """Main entry point."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=Config.LOG_FORMAT)
    try:
        args.handler(args)
    except (LandoError, ValueError) as e:
        logger.error(str(e))
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
