"""
Configuration management for the parametric LANDO framework.

``Config`` collects library-wide numerical and runtime defaults.
``StudyConfig`` describes one benchmark study (system, parameter box,
dataset sizes, solver grids, kernel, network) and is read from JSON.
"""
import json
import os
from dataclasses import dataclass, field, asdict
from typing import Any, Dict, List, Optional


class Config:
    """Library-wide defaults."""

    # Kernel learning
    PINV_RCOND = 1e-10  # relative singular-value cutoff for W~ = Y k(X~, X)^+
    DICTIONARY_JITTER_SCALE = 0.0  # jitter = scale * max_j k(x_j, x_j)
    ALD_ROUNDOFF_TOL = 1e-10  # delta >= -tol * k(x_c, x_c) before clamping
    MAX_CONDITION = 1e14  # max/min diagonal of the dictionary Cholesky factor

    # POD
    POD_ENERGY_THRESHOLD = 0.9999

    # Neural map
    SNAKE_FREQUENCY = 1.0
    LEARNING_RATE = 1e-3
    ADAM_BETA1 = 0.9
    ADAM_BETA2 = 0.999
    ADAM_EPSILON = 1e-8
    BATCH_SIZE = 32
    MAX_EPOCHS = 5000
    PATIENCE = 200
    MLP_PRESETS = {
        "lv": {"hidden_layers": [32, 32, 32], "activation": "snake"},
        "pde": {"hidden_layers": [110, 110, 110, 110], "activation": "snake"},
    }

    # Runtime
    WORKERS = 1
    PROGRESS_LOG_INTERVAL = 10.0  # seconds
    LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

    # Files
    MANIFEST_FILE = "manifest.json"
    SPLITS = ("train", "valid", "test")


SYSTEMS = ("lv", "lv2", "heat", "allen-cahn")


@dataclass
class StudyConfig:
    """One benchmark study, as read from a JSON configuration file."""

    system: str
    bounds: List[List[float]]
    counts: Dict[str, int]
    seed: int = 0
    x0: Optional[List[float]] = None
    t_end: float = 1.0
    n_snapshots: int = 101
    test_t_end: float = 1.0
    test_n_snapshots: int = 101
    grid: Optional[Any] = None
    solver_dt: Optional[float] = None
    fixed: Dict[str, float] = field(default_factory=dict)
    kernel: Dict[str, Any] = field(default_factory=lambda: {"kind": "linear"})
    nu: float = 1e-6
    targets: str = "exact"
    mlp_preset: str = "lv"
    mlp: Dict[str, Any] = field(default_factory=dict)
    pod_threshold: Optional[float] = None
    t_stars: List[float] = field(default_factory=list)

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise ValueError(f"unknown system '{self.system}', expected one of {SYSTEMS}")
        for low, high in self.bounds:
            if not low < high:
                raise ValueError(f"degenerate parameter bounds [{low}, {high}]")
        for split in Config.SPLITS:
            if self.counts.get(split, 0) < 1:
                raise ValueError(f"counts['{split}'] must be >= 1")
        if self.targets not in ("exact", "finite-difference"):
            raise ValueError(f"unknown targets '{self.targets}'")
        if self.mlp_preset not in Config.MLP_PRESETS:
            raise ValueError(f"unknown MLP preset '{self.mlp_preset}'")
        if self.n_snapshots < 3:
            raise ValueError("n_snapshots must be >= 3")
        if self.pod_threshold is not None and not 0.0 < self.pod_threshold <= 1.0:
            raise ValueError("pod_threshold must lie in (0, 1]")

    @property
    def dt(self) -> float:
        """Snapshot spacing of the training window."""
        return self.t_end / (self.n_snapshots - 1)

    @property
    def parameter_dim(self) -> int:
        return len(self.bounds)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'StudyConfig':
        """Build a study from ``data`` layered over the system defaults."""
        if "system" not in data:
            raise ValueError("study configuration requires 'system'")
        merged = default_study_config(data["system"]).to_dict()
        unknown = set(data) - set(merged)
        if unknown:
            raise ValueError(f"unknown configuration keys: {sorted(unknown)}")
        for key, value in data.items():
            if key in ("counts", "fixed") and isinstance(value, dict):
                merged[key] = {**merged[key], **value}
            else:
                merged[key] = value
        return cls(**merged)


def default_study_config(system: str) -> StudyConfig:
    """Desk-scale defaults for each benchmark system."""
    if system == "lv":
        return StudyConfig(
            system="lv",
            bounds=[[0.015, 0.1]],
            counts={"train": 150, "valid": 50, "test": 100},
            x0=[80.0, 20.0],
            t_end=400.0, n_snapshots=600,
            test_t_end=600.0, test_n_snapshots=601,
            fixed={"beta": 0.002, "gamma": 0.2, "delta": 0.0025},
            kernel={"kind": "polynomial", "degree": 2, "offset": 1.0},
            nu=1e-6,
            mlp_preset="lv",
            t_stars=[50.0 * k for k in range(1, 13)],
        )
    if system == "lv2":
        return StudyConfig(
            system="lv2",
            bounds=[[0.015, 0.1], [0.0012, 0.0022]],
            counts={"train": 560, "valid": 140, "test": 1200},
            x0=[80.0, 20.0],
            t_end=400.0, n_snapshots=600,
            test_t_end=600.0, test_n_snapshots=601,
            fixed={"gamma": 0.2, "delta": 0.0025},
            kernel={"kind": "polynomial", "degree": 2, "offset": 1.0},
            nu=1e-6,
            mlp_preset="lv",
            t_stars=[50.0 * k for k in range(1, 13)],
        )
    if system == "heat":
        return StudyConfig(
            system="heat",
            bounds=[[0.5, 1.0]],
            counts={"train": 100, "valid": 30, "test": 60},
            t_end=2.0, n_snapshots=201,
            test_t_end=4.0, test_n_snapshots=401,
            grid=[32, 32],
            fixed={"alpha_ic": 0.6},
            kernel={"kind": "linear"},
            nu=1e-5,
            mlp_preset="pde",
            pod_threshold=Config.POD_ENERGY_THRESHOLD,
            t_stars=[0.15, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0],
        )
    if system == "allen-cahn":
        return StudyConfig(
            system="allen-cahn",
            bounds=[[0.0001, 0.001], [0.5, 4.0]],
            counts={"train": 200, "valid": 60, "test": 100},
            t_end=0.6, n_snapshots=61,
            test_t_end=1.0, test_n_snapshots=101,
            grid=250,
            solver_dt=1e-4,
            kernel={"kind": "linear"},
            nu=1e-6,
            mlp_preset="pde",
            pod_threshold=Config.POD_ENERGY_THRESHOLD,
            t_stars=[round(0.05 * k, 2) for k in range(1, 20)],
        )
    raise ValueError(f"unknown system '{system}', expected one of {SYSTEMS}")


def load_study_config(path: str) -> StudyConfig:
    """Read a JSON study configuration from ``path``."""
    if not os.path.exists(path):
        raise ValueError(f"configuration file '{path}' not found")
    with open(path, 'r') as f:
        data = json.load(f)
    return StudyConfig.from_dict(data)
