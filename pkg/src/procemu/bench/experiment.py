"""End-to-end experiment: data, GQNQ, emulator, evaluation against the baseline.

Artifacts under ``<output_dir>``::

    data/                 dataset (see :mod:`procemu.bench.dataset`)
    checkpoints/gqnq      GQNQ parameters
    checkpoints/emulator  emulator parameters (linked to the GQNQ digest)
    gqnq_trace.csv        per-epoch GQNQ loss
    emulator_trace.csv    per-epoch emulator loss
    metrics.csv           per-test-state fidelities plus an aggregate row
    summary.json          MetricsReports and the GQNQ reconstruction fidelity
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from ..emulator import (
    EmulatorConfig,
    EmulatorNet,
    load_emulator,
    load_gqnq,
    predict_output_statistics,
    representation_pairs,
    save_emulator,
    save_gqnq,
    train_emulator,
)
from ..errors import TrainingDivergence
from ..gqnq import GqnqConfig, GqnqModel, TrainHyper, train_gqnq
from .baseline import NearestTrainingData
from .config import ExperimentConfig, sub_int
from .dataset import Dataset, ensure_dataset
from .metrics import MetricsReport, classical_fidelity

logger = logging.getLogger(__name__)

METRICS_SCHEMA = "procemu.metrics/v1"
SUMMARY_SCHEMA = "procemu.summary/v1"

# desk-scale training defaults; the config may override any field
GQNQ_TRAIN_DEFAULTS = {"epochs": 3000, "batch_size": 5, "lr0": 0.003, "lr_decay": 0.95, "lr_decay_every": 60}
EMULATOR_TRAIN_DEFAULTS = {"epochs": 600, "batch_size": 5, "lr0": 0.01, "lr_decay": 0.95, "lr_decay_every": 12}


def _hyper(overrides: dict, defaults: dict) -> TrainHyper:
    known = {f.name for f in fields(TrainHyper)}
    unknown = set(overrides) - known
    if unknown:
        raise ValueError(f"unknown training fields {sorted(unknown)}")
    return TrainHyper(**{**defaults, **overrides})


def gqnq_train_hyper(cfg: ExperimentConfig) -> TrainHyper:
    return _hyper(cfg.gqnq_train, GQNQ_TRAIN_DEFAULTS)


def emulator_train_hyper(cfg: ExperimentConfig) -> TrainHyper:
    return _hyper(cfg.emulator_train, EMULATOR_TRAIN_DEFAULTS)


def build_gqnq(cfg: ExperimentConfig, ds: Dataset) -> GqnqModel:
    arch = {k: v for k, v in cfg.gqnq.items() if k != "seed"}
    return GqnqModel(GqnqConfig(scheme=cfg.measurement["scheme"], encoding_dim=ds.meta["encoding_dim"],
                                num_outcomes=ds.meta["num_outcomes"], seed=sub_int(cfg.seed, "gqnq_init"), **arch))


def build_emulator(cfg: ExperimentConfig, model: GqnqModel) -> EmulatorNet:
    arch = {k: v for k, v in cfg.emulator.items() if k not in ("seed", "rep_dim")}
    return EmulatorNet(EmulatorConfig(rep_dim=model.config.rep_dim, seed=sub_int(cfg.seed, "emulator_init"), **arch))


def _dirs(cfg):
    out = Path(cfg.output_dir)
    return out, out / "checkpoints" / "gqnq", out / "checkpoints" / "emulator"


def _write_trace(path: Path, losses):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "loss"])
        for e, v in enumerate(losses):
            w.writerow([e, repr(float(v))])


def fiducial_states(ds: Dataset) -> list:
    """The 2 n_train fiducial record sets: training inputs then their outputs."""
    return ds.records("train", "input") + ds.records("train", "output")


def stage_gqnq(cfg: ExperimentConfig, ds: Dataset | None = None) -> GqnqModel:
    ds = ds or ensure_dataset(cfg)
    out, gdir, _ = _dirs(cfg)
    model = build_gqnq(cfg, ds)
    hyper = gqnq_train_hyper(cfg)
    try:
        res = train_gqnq(model, fiducial_states(ds), hyper, seed=sub_int(cfg.seed, "gqnq_batches"))
    except TrainingDivergence as exc:
        out.mkdir(parents=True, exist_ok=True)
        _write_trace(out / "gqnq_trace.csv", exc.trace)
        raise
    out.mkdir(parents=True, exist_ok=True)
    _write_trace(out / "gqnq_trace.csv", res.losses)
    save_gqnq(model, gdir, seed=cfg.seed, hyper=vars(hyper))
    return model


def stage_emulator(cfg: ExperimentConfig, ds: Dataset | None = None, model: GqnqModel | None = None) -> EmulatorNet:
    ds = ds or ensure_dataset(cfg)
    out, gdir, edir = _dirs(cfg)
    model = model or load_gqnq(gdir)
    pairs = representation_pairs(model, ds.records("train", "input"), ds.records("train", "output"))
    net = build_emulator(cfg, model)
    hyper = emulator_train_hyper(cfg)
    try:
        res = train_emulator(net, pairs, hyper)
    except TrainingDivergence as exc:
        _write_trace(out / "emulator_trace.csv", exc.trace)
        raise
    _write_trace(out / "emulator_trace.csv", res.losses)
    save_emulator(net, model, edir, seed=cfg.seed, hyper=vars(hyper))
    return net


def load_models(cfg: ExperimentConfig):
    _, gdir, edir = _dirs(cfg)
    model = load_gqnq(gdir)
    return model, load_emulator(edir, model)


@dataclass
class Evaluation:
    state_ids: list
    model_fid: np.ndarray
    baseline_fid: np.ndarray
    reconstruction_fid: np.ndarray
    model: MetricsReport
    baseline: MetricsReport
    reconstruction: MetricsReport


def baseline_fidelities(cfg: ExperimentConfig, ds: Dataset) -> np.ndarray:
    squared = cfg.fidelity == "squared"
    nearest = NearestTrainingData.from_dataset(ds)
    truth = ds.probs[("test", "output")]
    return np.array([np.mean(classical_fidelity(nearest.predict(ds.input_states[sid]), truth[k], squared))
                     for k, sid in enumerate(ds.state_ids["test"])])


def evaluate(cfg: ExperimentConfig, ds: Dataset, model: GqnqModel, net: EmulatorNet) -> Evaluation:
    if not ds.state_ids["test"]:
        raise ValueError("the dataset has no test states")
    squared = cfg.fidelity == "squared"
    test_in = ds.records("test", "input")
    truth = ds.probs[("test", "output")]
    queries = ds.encodings
    model_fid = np.array([np.mean(classical_fidelity(predict_output_statistics(model, net, rec, queries), t, squared))
                          for rec, t in zip(test_in, truth)])
    # GQNQ alone on the true output records of the same test states
    recon_fid = np.array([np.mean(classical_fidelity(model.generate(model.represent((queries, t)), queries), t, squared))
                          for t in truth])
    base_fid = baseline_fidelities(cfg, ds)
    return Evaluation(list(ds.state_ids["test"]), model_fid, base_fid, recon_fid,
                      MetricsReport.from_values(model_fid), MetricsReport.from_values(base_fid),
                      MetricsReport.from_values(recon_fid))


def write_metrics(cfg: ExperimentConfig, ev: Evaluation) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "metrics.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["state_id", "model_fid", "baseline_fid"])
        for sid, a, b in zip(ev.state_ids, ev.model_fid, ev.baseline_fid):
            w.writerow([sid, repr(float(a)), repr(float(b))])
        w.writerow(["mean", repr(ev.model.mean), repr(ev.baseline.mean)])
    summary = {
        "schema": SUMMARY_SCHEMA,
        "metrics_schema": METRICS_SCHEMA,
        "kind": cfg.kind,
        "seed": cfg.seed,
        "fidelity": cfg.fidelity,
        "n_train": cfg.n_train,
        "n_test": cfg.n_test,
        "model": ev.model.to_dict(),
        "baseline": ev.baseline.to_dict(),
        "reconstruction": ev.reconstruction.to_dict(),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return path


def read_metrics(path) -> dict:
    """Parse metrics.csv into per-state arrays and the aggregate row."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if rows[0] != ["state_id", "model_fid", "baseline_fid"]:
        raise ValueError(f"unexpected metrics header {rows[0]}")
    body = [r for r in rows[1:] if r[0] != "mean"]
    agg = next(r for r in rows[1:] if r[0] == "mean")
    return {
        "state_id": [int(r[0]) for r in body],
        "model_fid": np.array([float(r[1]) for r in body]),
        "baseline_fid": np.array([float(r[2]) for r in body]),
        "mean": (float(agg[1]), float(agg[2])),
    }


def run_experiment(cfg: ExperimentConfig) -> Evaluation:
    """Generate (or reuse) data, train both networks, evaluate, write CSV."""
    ds = ensure_dataset(cfg)
    model = stage_gqnq(cfg, ds)
    net = stage_emulator(cfg, ds, model)
    ev = evaluate(cfg, ds, model, net)
    write_metrics(cfg, ev)
    logger.info("model %.5f baseline %.5f reconstruction %.5f", ev.model.mean, ev.baseline.mean,
                ev.reconstruction.mean)
    return ev
