"""Neural emulator: an MLP acting on state representations, and the prediction pipeline."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import CheckpointMismatch, TrainingDivergence
from .gqnq import GqnqModel, TrainHyper, TrainResult
from .nn import MLP, AdamState, adam_update, lr_schedule, zero_grads
from .nn.checkpoint import load_checkpoint, read_manifest, save_checkpoint


@dataclass
class EmulatorConfig:
    rep_dim: int = 32
    hidden: tuple = (128, 128, 128)
    seed: int = 0

    def __post_init__(self):
        self.hidden = tuple(int(w) for w in self.hidden)


@dataclass
class RepresentationPair:
    r_in: np.ndarray
    r_out: np.ndarray

    def __post_init__(self):
        self.r_in = np.asarray(self.r_in, dtype=np.float64)
        self.r_out = np.asarray(self.r_out, dtype=np.float64)
        if self.r_in.shape != self.r_out.shape:
            raise ValueError("input and output representations differ in dimension")


class EmulatorNet:
    """Dense stack R^d -> R^d, ReLU on hidden layers, linear output layer."""

    def __init__(self, config: EmulatorConfig):
        self.config = config
        rng = np.random.default_rng(config.seed)
        self.mlp = MLP([config.rep_dim, *config.hidden, config.rep_dim], rng, name="emu")

    @property
    def params(self):
        return self.mlp.params

    def forward(self, r):
        r = np.asarray(r, dtype=np.float64)
        if r.shape[-1] != self.config.rep_dim:
            raise ValueError(f"representation width {r.shape[-1]} != emulator dimension {self.config.rep_dim}")
        return self.mlp.forward(r)

    def backward(self, dy, cache):
        return self.mlp.backward(dy, cache)


def emulate(net: EmulatorNet, r_in) -> np.ndarray:
    return net.forward(r_in)[0]


def _pair_arrays(pairs):
    if not pairs:
        raise ValueError("need at least one representation pair")
    R_in = np.stack([p.r_in for p in pairs])
    R_out = np.stack([p.r_out for p in pairs])
    return R_in, R_out


def emulator_loss(net: EmulatorNet, pairs) -> float:
    """sum_i ||h(r_in_i) - r_out_i||^2 (a sum, not a mean)."""
    R_in, R_out = _pair_arrays(pairs)
    if R_out.shape[1] != net.config.rep_dim:
        raise ValueError("pair dimension does not match emulator")
    diff = emulate(net, R_in) - R_out
    return float(np.sum(diff * diff))


def emulator_loss_and_grad(net: EmulatorNet, pairs) -> float:
    """Loss as :func:`emulator_loss`; gradients are accumulated into ``net.params``."""
    R_in, R_out = _pair_arrays(pairs)
    y, cache = net.forward(R_in)
    diff = y - R_out
    net.backward(2.0 * diff, cache)
    return float(np.sum(diff * diff))


def train_emulator(net: EmulatorNet, pairs, hyper: TrainHyper | None = None) -> TrainResult:
    """Pairs are visited in order; an Adam step is taken after every ``batch_size``
    items using the summed gradient divided by the batch size.  Trailing items
    that do not fill a batch are not used, except when there are fewer pairs
    than one batch, in which case all of them form a single step per epoch.
    """
    hyper = hyper or TrainHyper()
    pairs = list(pairs)
    _pair_arrays(pairs)
    params = net.params
    adam = AdamState()
    result = TrainResult()
    B = hyper.batch_size
    n = len(pairs)
    for epoch in range(hyper.epochs):
        lr = lr_schedule(epoch, hyper.lr0, hyper.lr_decay, hyper.lr_decay_every)
        epoch_loss = 0.0
        if n < B:
            zero_grads(params)
            epoch_loss = emulator_loss_and_grad(net, pairs)
            adam_update(params, adam, lr, grad_scale=1.0 / n)
        else:
            zero_grads(params)
            for k in range(1, n + 1):
                epoch_loss += emulator_loss_and_grad(net, pairs[k - 1 : k])
                if k % B == 0:
                    adam_update(params, adam, lr, grad_scale=1.0 / B)
                    zero_grads(params)
        if not np.isfinite(epoch_loss):
            raise TrainingDivergence(f"non-finite emulator loss at epoch {epoch}", result.losses)
        result.losses.append(epoch_loss)
    return result


def representation_pairs(model: GqnqModel, input_records, output_records) -> list[RepresentationPair]:
    """Representations of each (input, output) state with the frozen GQNQ model."""
    if len(input_records) != len(output_records):
        raise ValueError("need one output record set per input record set")
    return [
        RepresentationPair(model.represent(a), model.represent(b))
        for a, b in zip(input_records, output_records)
    ]


def predict_output_statistics(model: GqnqModel, net: EmulatorNet, input_records, queries) -> np.ndarray:
    """g(h(represent(input_records)), query) for one or several queries."""
    if len(input_records) == 0:
        raise ValueError("need the input state's measurement records")
    if net.config.rep_dim != model.config.rep_dim:
        raise ValueError("emulator and GQNQ representation dimensions differ")
    r = emulate(net, model.represent(input_records))
    return model.generate(r, queries)


# -- checkpoints ----------------------------------------------------------------

def _linkage_hash(model: GqnqModel) -> str:
    blob = json.dumps(model.architecture(), sort_keys=True).encode() + model.digest().encode()
    return hashlib.sha256(blob).hexdigest()


def save_gqnq(model: GqnqModel, directory, seed=None, hyper=None) -> Path:
    return save_checkpoint(
        directory, model.params, hyper=hyper, seed=seed,
        extra={"kind": "gqnq", "architecture": model.architecture(), "linkage": _linkage_hash(model)},
    )


def load_gqnq(directory) -> GqnqModel:
    from .gqnq import GqnqConfig

    manifest = read_manifest(directory)
    if manifest.get("kind") != "gqnq":
        raise CheckpointMismatch("not a GQNQ checkpoint")
    model = GqnqModel(GqnqConfig(**manifest["architecture"]))
    load_checkpoint(directory, model.params)
    return model


def save_emulator(net: EmulatorNet, model: GqnqModel, directory, seed=None, hyper=None) -> Path:
    return save_checkpoint(
        directory, net.params, hyper=hyper, seed=seed,
        extra={"kind": "emulator", "architecture": asdict(net.config), "gqnq_linkage": _linkage_hash(model)},
    )


def load_emulator(directory, model: GqnqModel) -> EmulatorNet:
    manifest = read_manifest(directory)
    if manifest.get("kind") != "emulator":
        raise CheckpointMismatch("not an emulator checkpoint")
    if manifest.get("gqnq_linkage") != _linkage_hash(model):
        raise CheckpointMismatch("emulator checkpoint was trained against a different GQNQ model")
    net = EmulatorNet(EmulatorConfig(**manifest["architecture"]))
    if net.config.rep_dim != model.config.rep_dim:
        raise CheckpointMismatch("emulator dimension does not match GQNQ representation dimension")
    load_checkpoint(directory, net.params)
    return net
