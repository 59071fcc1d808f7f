"""Experiment configuration (a single JSON document) and seed fan-out."""

from __future__ import annotations

import copy
import json
import zlib
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

CONFIG_SCHEMA = "procemu.config/v1"
KINDS = ("circuit", "circuit_noisy", "long_range_dynamics", "ising_quench", "kerr_cv")

_DEFAULT_MEASUREMENT = {
    "circuit": {"scheme": "pauli_full"},
    "circuit_noisy": {"scheme": "pauli_full"},
    "long_range_dynamics": {"scheme": "pauli_full"},
    "ising_quench": {"scheme": "pauli_klocal", "k": 3, "contiguous": True},
    "kerr_cv": {"scheme": "homodyne", "num_thetas": 100, "x_min": -6.0, "x_max": 6.0, "num_bins": 120},
}

_DEFAULT_ENSEMBLE = {
    "circuit": {"name": "rotated_zero", "angle_bound": 0.3 * np.pi},
    "circuit_noisy": {"name": "rotated_zero", "angle_bound": 0.3 * np.pi},
    "long_range_dynamics": {"name": "rotated_plus", "angle_bound": np.pi / 10},
    "ising_quench": {"J_values": [-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5], "J_std": 1.0},
    "kerr_cv": {"r_max": 2.0},
}

_DEFAULT_PROCESS = {
    "circuit": {"depth": 3, "noise_rate": 0.0, "angle_max": 2 * np.pi},
    "circuit_noisy": {"depth": 3, "noise_rate": 0.01, "angle_max": 2 * np.pi},
    "long_range_dynamics": {"alpha": 0.01, "B": 1.0, "t": 1.0},
    "ising_quench": {"J": 0.5, "g": 1.0, "t": 10.0, "simulator": "exact", "dt": 0.02,
                     "chi_max": 64, "svd_cutoff": 1e-10},
    "kerr_cv": {"t": 1.0, "cutoff": 30},
}

_DEFAULT_SIZE = {"circuit": 2, "circuit_noisy": 2, "long_range_dynamics": 3, "ising_quench": 6, "kerr_cv": 1}


@dataclass
class ExperimentConfig:
    kind: str
    seed: int
    system_size: int = None
    n_train: int = 20
    n_test: int = 10
    ensemble: dict = field(default_factory=dict)
    process: dict = field(default_factory=dict)
    measurement: dict = field(default_factory=dict)
    gqnq: dict = field(default_factory=dict)
    gqnq_train: dict = field(default_factory=dict)
    emulator: dict = field(default_factory=dict)
    emulator_train: dict = field(default_factory=dict)
    shots: int | None = None
    fidelity: str = "bhattacharyya"
    output_dir: str = "run"
    name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}; choose from {KINDS}")
        if self.seed is None:
            raise ValueError("a master seed is required")
        self.seed = int(self.seed)
        if self.system_size is None:
            self.system_size = _DEFAULT_SIZE[self.kind]
        self.ensemble = {**_DEFAULT_ENSEMBLE[self.kind], **self.ensemble}
        self.process = {**_DEFAULT_PROCESS[self.kind], **self.process}
        self.measurement = {**_DEFAULT_MEASUREMENT[self.kind], **self.measurement}
        if self.n_train < 1 or self.n_test < 0:
            raise ValueError("need n_train >= 1 and n_test >= 0")
        if self.fidelity not in ("bhattacharyya", "squared"):
            raise ValueError("fidelity must be 'bhattacharyya' or 'squared'")
        if self.shots is not None and int(self.shots) < 1:
            raise ValueError("shots must be >= 1")
        if self.kind.startswith("circuit") and self.system_size < 1:
            raise ValueError("circuit experiments need at least one qubit")
        if self.kind in ("long_range_dynamics", "ising_quench") and self.system_size < 2:
            raise ValueError("spin chains need L >= 2")
        if self.kind == "long_range_dynamics" and self.process["alpha"] <= 0:
            raise ValueError("alpha must be positive")
        if self.kind == "kerr_cv" and self.ensemble["r_max"] <= 0:
            raise ValueError("r_max must be positive")
        if "angle_bound" in self.ensemble and self.ensemble["angle_bound"] <= 0:
            raise ValueError("angle_bound must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = copy.deepcopy(d)
        schema = d.pop("schema", CONFIG_SCHEMA)
        if schema != CONFIG_SCHEMA:
            raise ValueError(f"unsupported config schema {schema!r}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        cfg = cls.from_dict(json.loads(path.read_text()))
        out = Path(cfg.output_dir)
        if not out.is_absolute():
            cfg.output_dir = str(path.parent / out)
        return cfg

    def to_dict(self) -> dict:
        return {"schema": CONFIG_SCHEMA, **asdict(self)}

    def dataset_dict(self) -> dict:
        """The part of the config that determines the dataset."""
        keys = ("kind", "seed", "system_size", "n_train", "n_test", "ensemble", "process", "measurement", "shots")
        return {k: getattr(self, k) for k in keys}

    @property
    def n_total(self) -> int:
        return self.n_train + self.n_test


def sub_seed(master: int, name: str) -> np.random.SeedSequence:
    """Independent, name-keyed child seed of the master seed."""
    return np.random.SeedSequence([int(master), zlib.crc32(name.encode())])


def sub_rng(master: int, name: str) -> np.random.Generator:
    return np.random.default_rng(sub_seed(master, name))


def sub_int(master: int, name: str) -> int:
    return int(sub_seed(master, name).generate_state(1, dtype=np.uint32)[0])
