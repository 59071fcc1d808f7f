"""Checkpoints: ``manifest.json`` plus one raw little-endian float64 file per parameter."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from ..errors import CheckpointMismatch

SCHEMA = "procemu.checkpoint/v1"
_DTYPE = np.dtype("<f8")


def _fname(name: str) -> str:
    return name.replace("/", "_") + ".f64"


def save_checkpoint(directory, params, hyper: dict | None = None, seed: int | None = None,
                    extra: dict | None = None) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for p in params:
        fname = _fname(p.name)
        (directory / fname).write_bytes(np.ascontiguousarray(p.values, dtype=_DTYPE).tobytes())
        entries.append({"name": p.name, "shape": list(p.shape), "file": fname})
    manifest = {"schema": SCHEMA, "params": entries, "hyper": hyper or {}, "seed": seed}
    manifest.update(extra or {})
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return directory


def read_manifest(directory) -> dict:
    manifest = json.loads((Path(directory) / "manifest.json").read_text())
    if manifest.get("schema") != SCHEMA:
        raise CheckpointMismatch(f"unsupported checkpoint schema {manifest.get('schema')!r}")
    return manifest


def load_checkpoint(directory, params) -> dict:
    """Copy stored values into ``params`` (matched by name); returns the manifest."""
    directory = Path(directory)
    manifest = read_manifest(directory)
    stored = {e["name"]: e for e in manifest["params"]}
    names = [p.name for p in params]
    if sorted(stored) != sorted(names):
        raise CheckpointMismatch("parameter names in checkpoint do not match the model")
    for p in params:
        e = stored[p.name]
        if tuple(e["shape"]) != p.shape:
            raise CheckpointMismatch(f"{p.name}: stored shape {e['shape']} != model shape {list(p.shape)}")
        raw = np.frombuffer((directory / e["file"]).read_bytes(), dtype=_DTYPE)
        p.values[...] = raw.reshape(p.shape)
    return manifest


def params_digest(params) -> str:
    """SHA-256 over names, shapes and raw value bytes."""
    h = hashlib.sha256()
    for p in params:
        h.update(p.name.encode())
        h.update(str(p.shape).encode())
        h.update(np.ascontiguousarray(p.values, dtype=_DTYPE).tobytes())
    return h.hexdigest()
