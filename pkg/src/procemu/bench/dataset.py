"""Seeded dataset generation.

Layout under ``<output_dir>/data``::

    records.jsonl   one line per (state, role, measurement)
    states.jsonl    simulation sidecar: the input state of every sample
    meta.json       schema tag, counts, measurement labels, config echo

Records carry the exact (or finite-shot resampled) outcome distribution.
Test-state output records are always exact: they are the ground truth.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import CapabilityError, DataError
from ..gqnq import encode_homodyne, encode_pauli_full, encode_pauli_klocal
from ..mps import TebdParams, local_pauli_statistics, mps_from_statevector, tebd_evolve
from ..qsim.core import (
    CircuitSpec,
    QubitState,
    full_pauli_specs,
    klocal_pauli_specs,
    pauli_statistics,
    prepare_input_state,
    run_circuit,
)
from ..qsim.cv import (
    FockState,
    QuadratureGrid,
    coherent_state,
    homodyne_distribution,
    homodyne_thetas,
    kerr_evolve,
)
from ..qsim.hamiltonian import HamiltonianSpec, Propagator, build_hamiltonian, ground_state
from .config import ExperimentConfig, sub_rng

RECORD_SCHEMA = "procemu.record/v1"
STATE_SCHEMA = "procemu.state/v1"
META_SCHEMA = "procemu.dataset/v1"


def finite_shot_resample(p, shots: int, rng) -> np.ndarray:
    """Empirical frequencies of ``shots`` multinomial draws from ``p``."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = np.clip(np.asarray(p, dtype=np.float64), 0.0, None)
    p = p / p.sum()
    return rng.multinomial(int(shots), p) / float(shots)


@dataclass
class Measurement:
    label: str
    encoding: np.ndarray
    spec: object  # PauliBasisSpec or homodyne angle


def measurement_set(cfg: ExperimentConfig) -> list[Measurement]:
    m = cfg.measurement
    n = cfg.system_size
    if m["scheme"] == "pauli_full":
        return [Measurement(s.label_string, encode_pauli_full(s.labels).vector, s) for s in full_pauli_specs(n)]
    if m["scheme"] == "pauli_klocal":
        specs = klocal_pauli_specs(n, int(m.get("k", 3)), bool(m.get("contiguous", True)))
        return [Measurement("".join(f"{lab}{site}" for site, lab in zip(s.sites, s.labels)),
                            encode_pauli_klocal(s, n).vector, s) for s in specs]
    if m["scheme"] == "homodyne":
        return [Measurement(f"theta={th:.12g}", encode_homodyne(th).vector, float(th))
                for th in homodyne_thetas(int(m.get("num_thetas", 100)))]
    raise ValueError(f"unknown measurement scheme {m['scheme']!r}")


def _grid(cfg) -> QuadratureGrid:
    m = cfg.measurement
    return QuadratureGrid(float(m.get("x_min", -6.0)), float(m.get("x_max", 6.0)), int(m.get("num_bins", 120)))


class _Kind:
    """Per-kind sampler, process and statistics."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.meas = measurement_set(cfg)

    def stats(self, state) -> np.ndarray:
        return np.stack([pauli_statistics(state, m.spec) for m in self.meas])


class _CircuitKind(_Kind):
    def __init__(self, cfg):
        super().__init__(cfg)
        p = cfg.process
        noise = float(p["noise_rate"]) if cfg.kind == "circuit_noisy" else 0.0
        self.circuit = CircuitSpec.random(cfg.system_size, int(p["depth"]), sub_rng(cfg.seed, "process"),
                                          noise_rate=noise, angle_max=float(p["angle_max"]))

    def sample(self, rng):
        e = self.cfg.ensemble
        state = prepare_input_state(e["name"], float(e["angle_bound"]), rng, self.cfg.system_size)
        return state, {}

    def evolve(self, state):
        return run_circuit(self.circuit, state)


class _LongRangeKind(_Kind):
    def __init__(self, cfg):
        super().__init__(cfg)
        p = cfg.process
        H = build_hamiltonian(HamiltonianSpec("long_range_ising", cfg.system_size, alpha=float(p["alpha"]), B=float(p["B"])))
        self.prop = Propagator(H)
        self.t = float(p["t"])

    def sample(self, rng):
        e = self.cfg.ensemble
        return prepare_input_state(e["name"], float(e["angle_bound"]), rng, self.cfg.system_size), {}

    def evolve(self, state):
        return self.prop.evolve(state, self.t)


class _IsingKind(_Kind):
    def __init__(self, cfg):
        super().__init__(cfg)
        p = cfg.process
        self.exact = p["simulator"] == "exact"
        if p["simulator"] not in ("exact", "tebd"):
            raise ValueError("ising simulator must be 'exact' or 'tebd'")
        self.tebd = TebdParams(J=float(p["J"]), g=float(p["g"]), dt=float(p["dt"]), t_total=float(p["t"]),
                               chi_max=int(p["chi_max"]), svd_cutoff=float(p["svd_cutoff"]))
        if self.exact:
            H = build_hamiltonian(HamiltonianSpec("ising", cfg.system_size, J=float(p["J"]), g=float(p["g"])))
            self.prop = Propagator(H)

    def sample(self, rng):
        e = self.cfg.ensemble
        J = float(rng.choice(np.asarray(e["J_values"], dtype=float)))
        J_sites = rng.normal(J, float(e["J_std"]), size=self.cfg.system_size - 1)
        H = build_hamiltonian(HamiltonianSpec("site_dep_ising", self.cfg.system_size, g=float(self.cfg.process["g"]),
                                              J_sites=J_sites))
        state, _ = ground_state(H)
        return state, {"J": J}

    def evolve(self, state):
        if self.exact:
            return self.prop.evolve(state, self.tebd.t_total)
        return tebd_evolve(mps_from_statevector(state), self.tebd).state

    def stats(self, state) -> np.ndarray:
        if isinstance(state, QubitState):
            return super().stats(state)
        return np.stack([local_pauli_statistics(state, m.spec) for m in self.meas])


class _KerrKind(_Kind):
    def __init__(self, cfg):
        super().__init__(cfg)
        self.grid = _grid(cfg)
        self.cutoff = int(cfg.process["cutoff"])
        self.t = float(cfg.process["t"])

    def sample(self, rng):
        r = rng.uniform(0.0, float(self.cfg.ensemble["r_max"]))
        psi = rng.uniform(0.0, 2 * np.pi)
        alpha = r * np.exp(1j * psi)
        return coherent_state(alpha, self.cutoff), {"r": float(r), "psi": float(psi)}

    def evolve(self, state):
        return kerr_evolve(state, self.t)

    def stats(self, state) -> np.ndarray:
        return np.stack([homodyne_distribution(state, m.spec, self.grid) for m in self.meas])


_KINDS = {
    "circuit": _CircuitKind,
    "circuit_noisy": _CircuitKind,
    "long_range_dynamics": _LongRangeKind,
    "ising_quench": _IsingKind,
    "kerr_cv": _KerrKind,
}


@dataclass
class Dataset:
    """In-memory view of a generated dataset."""

    meta: dict
    encodings: np.ndarray  # (|M|, enc_dim)
    labels: list
    probs: dict  # (split, role) -> array (n_split, |M|, m)
    state_ids: dict  # split -> list of ids
    input_states: dict  # state_id -> amplitude vector (complex)

    def records(self, split: str, role: str) -> list:
        """Per-state stacked (M, P) record tuples."""
        return [(self.encodings, P) for P in self.probs[(split, role)]]


def _data_dir(cfg) -> Path:
    return Path(cfg.output_dir) / "data"


def _num(x) -> list:
    return [float(v) for v in np.asarray(x).reshape(-1)]


def generate_dataset(cfg: ExperimentConfig, directory=None) -> Path:
    """Sample, simulate and write the dataset; returns the data directory."""
    out = Path(directory) if directory is not None else _data_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    try:
        kind = _KINDS[cfg.kind](cfg)
    except CapabilityError as exc:
        raise CapabilityError(f"{cfg.kind}, size {cfg.system_size}: {exc}") from exc
    ens_rng = sub_rng(cfg.seed, "ensemble")
    shot_rng = sub_rng(cfg.seed, "shots")
    splits = ["train"] * cfg.n_train + ["test"] * cfg.n_test

    rec_lines, state_lines = [], []
    for sid, split in enumerate(splits):
        state, info = kind.sample(ens_rng)
        try:
            out_state = kind.evolve(state)
            stats = {"input": kind.stats(state), "output": kind.stats(out_state)}
        except CapabilityError as exc:
            raise CapabilityError(f"state {sid} ({cfg.kind}): {exc}") from exc
        amps = state.amplitudes if isinstance(state, (QubitState, FockState)) else None
        state_lines.append(json.dumps({"schema": STATE_SCHEMA, "state_id": sid, "split": split, "info": info,
                                       "re": _num(amps.real), "im": _num(amps.imag)}))
        for role in ("input", "output"):
            for j, meas in enumerate(kind.meas):
                p = stats[role][j]
                if cfg.shots is not None and not (split == "test" and role == "output"):
                    p = finite_shot_resample(p, int(cfg.shots), shot_rng)
                rec_lines.append(json.dumps({
                    "schema": RECORD_SCHEMA, "state_id": sid, "split": split, "role": role,
                    "measurement": j, "label": meas.label, "encoding": _num(meas.encoding), "probs": _num(p),
                }))

    (out / "records.jsonl").write_text("\n".join(rec_lines) + "\n")
    (out / "states.jsonl").write_text("\n".join(state_lines) + "\n")
    meta = {
        "schema": META_SCHEMA,
        "config": cfg.dataset_dict(),
        "config_hash": hashlib.sha256(json.dumps(cfg.dataset_dict(), sort_keys=True).encode()).hexdigest(),
        "n_train": cfg.n_train,
        "n_test": cfg.n_test,
        "num_measurements": len(kind.meas),
        "num_outcomes": int(len(rec_lines) and len(json.loads(rec_lines[0])["probs"])),
        "encoding_dim": int(len(kind.meas[0].encoding)),
        "labels": [m.label for m in kind.meas],
        "num_records": len(rec_lines),
    }
    if isinstance(kind, _CircuitKind):
        meta["circuit_angles"] = _num(kind.circuit.angles)
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return out


def load_dataset(directory) -> Dataset:
    d = Path(directory)
    try:
        meta = json.loads((d / "meta.json").read_text())
    except FileNotFoundError:
        raise DataError(f"no dataset at {d}; run gen-data first")
    if meta.get("schema") != META_SCHEMA:
        raise DataError(f"unsupported dataset schema {meta.get('schema')!r}")
    n_meas = meta["num_measurements"]
    enc = np.full((n_meas, meta["encoding_dim"]), np.nan)
    rows: dict = {}
    ids: dict = {"train": [], "test": []}
    with open(d / "records.jsonl") as fh:
        for line in fh:
            r = json.loads(line)
            if r.get("schema") != RECORD_SCHEMA:
                raise DataError(f"unsupported record schema {r.get('schema')!r}")
            j = r["measurement"]
            if np.isnan(enc[j, 0]):
                enc[j] = r["encoding"]
            elif not np.array_equal(enc[j], r["encoding"]):
                raise DataError(f"measurement {j} has inconsistent encodings")
            if min(r["probs"]) < -1e-12 or abs(sum(r["probs"]) - 1.0) > 1e-9:
                raise DataError(f"record for state {r['state_id']} measurement {j} is not a distribution")
            rows.setdefault((r["split"], r["role"], r["state_id"]), {})[r["measurement"]] = r["probs"]
    states = {}
    with open(d / "states.jsonl") as fh:
        for line in fh:
            s = json.loads(line)
            ids[s["split"]].append(s["state_id"])
            states[s["state_id"]] = np.asarray(s["re"]) + 1j * np.asarray(s["im"])
    probs = {}
    for split in ("train", "test"):
        for role in ("input", "output"):
            blocks = []
            for sid in ids[split]:
                per = rows.get((split, role, sid), {})
                if len(per) != n_meas:
                    raise DataError(f"state {sid} {role}: {len(per)} of {n_meas} records present")
                blocks.append(np.array([per[j] for j in range(n_meas)]))
            probs[(split, role)] = np.array(blocks).reshape(len(ids[split]), n_meas, meta["num_outcomes"])
    return Dataset(meta, enc, meta["labels"], probs, ids, states)


def ensure_dataset(cfg: ExperimentConfig) -> Dataset:
    """Load the dataset for ``cfg``, regenerating it if missing or stale."""
    d = _data_dir(cfg)
    want = hashlib.sha256(json.dumps(cfg.dataset_dict(), sort_keys=True).encode()).hexdigest()
    try:
        if json.loads((d / "meta.json").read_text()).get("config_hash") == want:
            return load_dataset(d)
    except (FileNotFoundError, json.JSONDecodeError):
        pass
    generate_dataset(cfg)
    return load_dataset(d)
