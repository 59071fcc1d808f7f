"""Command-line entry point: ``procemu <command> <config.json> [options]``.

Results go to stdout as JSON; failures print a JSON object with ``error``
and ``message`` keys to stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from ..errors import ProcEmuError
from .baseline import NearestTrainingData
from .config import ExperimentConfig
from .dataset import ensure_dataset, generate_dataset, load_dataset
from .experiment import (
    baseline_fidelities,
    evaluate,
    load_models,
    run_experiment,
    stage_emulator,
    stage_gqnq,
    write_metrics,
)
from .metrics import MetricsReport


class _JsonArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        _fail("UsageError", message, code=2)


def _fail(kind: str, message: str, code: int = 1):
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    sys.exit(code)


def _emit(obj):
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = int(args.seed)
    if args.shots is not None:
        if args.shots < 1:
            raise ValueError("--shots must be >= 1")
        cfg.shots = int(args.shots)
    if args.output_dir is not None:
        cfg.output_dir = args.output_dir
    return cfg


def _measurement_index(ds, spec: str) -> int:
    """Accept a measurement label, an integer index, or a comma-separated encoding."""
    if spec in ds.labels:
        return ds.labels.index(spec)
    if spec.isdigit():
        j = int(spec)
        if j >= len(ds.labels):
            raise ValueError(f"measurement index {j} out of range (0..{len(ds.labels) - 1})")
        return j
    try:
        vec = np.array([float(x) for x in spec.split(",")])
    except ValueError:
        raise ValueError(f"unknown measurement {spec!r}; use a label such as {ds.labels[0]!r}, an index, "
                         "or a comma-separated encoding")
    hits = np.where(np.all(np.isclose(ds.encodings, vec), axis=1))[0] if vec.shape[0] == ds.encodings.shape[1] else []
    if len(hits) == 0:
        raise ValueError(f"encoding {spec!r} matches no measurement in the set")
    return int(hits[0])


def cmd_gen_data(cfg, args):
    path = generate_dataset(cfg)
    meta = json.loads((path / "meta.json").read_text())
    return {"data_dir": str(path), "num_records": meta["num_records"], "config_hash": meta["config_hash"]}


def cmd_train_gqnq(cfg, args):
    model = stage_gqnq(cfg)
    return {"gqnq_digest": model.digest()}


def cmd_train_emulator(cfg, args):
    net = stage_emulator(cfg, ensure_dataset(cfg))
    from ..nn import params_digest

    return {"emulator_digest": params_digest(net.params)}


def cmd_predict(cfg, args):
    from ..emulator import predict_output_statistics

    ds = load_dataset(f"{cfg.output_dir}/data")
    if args.state not in ds.input_states:
        raise ValueError(f"unknown state id {args.state}")
    j = _measurement_index(ds, args.measurement)
    split = "train" if args.state in ds.state_ids["train"] else "test"
    k = ds.state_ids[split].index(args.state)
    records = ds.records(split, "input")[k]
    model, net = load_models(cfg)
    p = predict_output_statistics(model, net, records, ds.encodings[j])
    return {"state_id": args.state, "measurement": ds.labels[j], "probs": [float(x) for x in p]}


def cmd_evaluate(cfg, args):
    ds = ensure_dataset(cfg)
    model, net = load_models(cfg)
    ev = evaluate(cfg, ds, model, net)
    path = write_metrics(cfg, ev)
    return {"metrics": str(path), "model": ev.model.to_dict(), "baseline": ev.baseline.to_dict(),
            "reconstruction": ev.reconstruction.to_dict()}


def cmd_baseline(cfg, args):
    ds = ensure_dataset(cfg)
    fid = baseline_fidelities(cfg, ds)
    nearest = NearestTrainingData.from_dataset(ds)
    return {
        "baseline": MetricsReport.from_values(fid).to_dict(),
        "per_state": [{"state_id": sid, "nearest_train_id": nearest.nearest_id(ds.input_states[sid]),
                       "baseline_fid": float(f)} for sid, f in zip(ds.state_ids["test"], fid)],
    }


def cmd_run(cfg, args):
    ev = run_experiment(cfg)
    return {"model": ev.model.to_dict(), "baseline": ev.baseline.to_dict(),
            "reconstruction": ev.reconstruction.to_dict()}


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train-gqnq": cmd_train_gqnq,
    "train-emulator": cmd_train_emulator,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "baseline": cmd_baseline,
    "run": cmd_run,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _JsonArgumentParser(prog="procemu", description="Learn and benchmark quantum process emulators.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_JsonArgumentParser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", help="experiment config JSON")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--shots", type=int, help="resample recorded statistics with N shots")
        p.add_argument("--output-dir", help="override the output directory")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "predict":
            p.add_argument("--state", type=int, required=True, help="state id")
            p.add_argument("--measurement", required=True, help="label, index or comma-separated encoding")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = _load_config(args)
        _emit(COMMANDS[args.command](cfg, args))
    except (ProcEmuError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        _fail(type(exc).__name__, str(exc))
    except Exception as exc:  # still report machine-readably
        _fail("InternalError", f"{type(exc).__name__}: {exc}", code=3)
    return 0


if __name__ == "__main__":
    sys.exit(main())
