"""Representation network, mean aggregation and LSTM generation network.

A state is described to the model by its measurement records, pairs
``(m_j, p_j)`` of a measurement encoding and the observed outcome
distribution.  :meth:`GqnqModel.represent` maps the records to a vector
``r``; :meth:`GqnqModel.generate` maps ``(r, m')`` to a predicted
distribution for the query measurement ``m'``.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DataError, TrainingDivergence
from .nn import (
    MLP,
    AdamState,
    Dense,
    LSTMCell,
    adam_update,
    cross_entropy_from_logits,
    lr_schedule,
    params_digest,
    softmax,
    zero_grads,
)
from .nn.layers import PROB_FLOOR, relu, relu_backward
from .qsim.core import PauliBasisSpec

logger = logging.getLogger(__name__)

SCHEMES = ("pauli_full", "pauli_klocal", "homodyne")
_PAULI_INDEX = {"X": 0, "Y": 1, "Z": 2}


@dataclass
class MeasurementEncoding:
    scheme: str
    vector: np.ndarray

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown encoding scheme {self.scheme!r}")
        self.vector = np.asarray(self.vector, dtype=np.float64).reshape(-1)


def encode_pauli_full(labels) -> MeasurementEncoding:
    labels = "".join(labels).upper()
    v = np.zeros(3 * len(labels))
    for q, lab in enumerate(labels):
        v[3 * q + _PAULI_INDEX[lab]] = 1.0
    return MeasurementEncoding("pauli_full", v)


def encode_pauli_klocal(spec: PauliBasisSpec, num_sites: int) -> MeasurementEncoding:
    blocks = []
    for s, lab in zip(spec.sites, spec.labels):
        block = np.zeros(num_sites + 3)
        block[s] = 1.0
        block[num_sites + _PAULI_INDEX[lab]] = 1.0
        blocks.append(block)
    return MeasurementEncoding("pauli_klocal", np.concatenate(blocks))


def encode_homodyne(theta: float) -> MeasurementEncoding:
    return MeasurementEncoding("homodyne", np.array([np.cos(theta), np.sin(theta)]))


@dataclass
class GqnqConfig:
    scheme: str
    encoding_dim: int
    num_outcomes: int
    rep_dim: int = 32
    rep_hidden: tuple = (128, 128)
    gen_hidden: int = 128
    lstm_hidden: int = 128
    lstm_steps: int = 4
    seed: int = 0

    def __post_init__(self):
        self.rep_hidden = tuple(int(w) for w in self.rep_hidden)
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown encoding scheme {self.scheme!r}")


@dataclass
class TrainHyper:
    epochs: int = 100
    batch_size: int = 5
    lr0: float = 0.01
    lr_decay: float = 0.95
    lr_decay_every: int = 1


@dataclass
class TrainResult:
    losses: list = field(default_factory=list)

    @property
    def final_loss(self) -> float:
        return self.losses[-1] if self.losses else float("nan")


def _stack_records(records):
    """Accept a list of (m, p) pairs or a pre-stacked (M, P) tuple of arrays."""
    if isinstance(records, tuple) and len(records) == 2 and isinstance(records[0], np.ndarray) and records[0].ndim == 2:
        return records
    if len(records) == 0:
        raise ValueError("need at least one measurement record")
    M = np.stack([np.asarray(getattr(m, "vector", m), dtype=np.float64) for m, _ in records])
    P = np.stack([np.asarray(p, dtype=np.float64) for _, p in records])
    return M, P


class GqnqModel:
    def __init__(self, config: GqnqConfig):
        self.config = cfg = config
        rng = np.random.default_rng(cfg.seed)
        self.rep = MLP([cfg.encoding_dim + cfg.num_outcomes, *cfg.rep_hidden, cfg.rep_dim], rng, name="rep")
        self.gen_enc = Dense(cfg.rep_dim + cfg.encoding_dim, cfg.gen_hidden, rng, name="gen.enc")
        self.gen_seed = Dense(cfg.gen_hidden, cfg.lstm_hidden, rng, name="gen.seed")
        self.lstm = LSTMCell(cfg.gen_hidden, cfg.lstm_hidden, rng, name="gen.lstm")
        self.head = Dense(cfg.lstm_hidden, cfg.num_outcomes, rng, name="gen.head")

    @property
    def params(self):
        return (
            self.rep.params + self.gen_enc.params + self.gen_seed.params
            + self.lstm.params + self.head.params
        )

    def digest(self) -> str:
        return params_digest(self.params)

    def architecture(self) -> dict:
        return asdict(self.config)

    # -- checks ----------------------------------------------------------

    def _check_records(self, M, P):
        cfg = self.config
        if M.shape[0] == 0:
            raise ValueError("need at least one measurement record")
        if M.shape[1] != cfg.encoding_dim:
            raise ValueError(f"encoding width {M.shape[1]} != model encoding_dim {cfg.encoding_dim}")
        if P.shape[1] != cfg.num_outcomes:
            raise ValueError(f"distribution width {P.shape[1]} != model outcomes {cfg.num_outcomes}")

    def _query_matrix(self, queries) -> np.ndarray:
        if isinstance(queries, MeasurementEncoding):
            queries = [queries]
        rows = []
        for q in queries:
            if isinstance(q, MeasurementEncoding):
                if q.scheme != self.config.scheme:
                    raise ValueError(f"query scheme {q.scheme!r} does not match model scheme {self.config.scheme!r}")
                rows.append(q.vector)
            else:
                rows.append(np.asarray(q, dtype=np.float64))
        Q = np.stack(rows) if rows else np.zeros((0, self.config.encoding_dim))
        if Q.ndim != 2 or Q.shape[1] != self.config.encoding_dim:
            raise ValueError(f"query encodings must have width {self.config.encoding_dim}")
        return Q

    # -- forward / backward ---------------------------------------------

    def _represent_forward(self, M, P):
        per_record, cache = self.rep.forward(np.concatenate([M, P], axis=1))
        return per_record.mean(axis=0), (cache, M.shape[0])

    def _represent_backward(self, dr, cache):
        rep_cache, n = cache
        self.rep.backward(np.broadcast_to(dr / n, (n, dr.size)).copy(), rep_cache)

    def _generate_forward(self, r, Q):
        q = Q.shape[0]
        inp = np.concatenate([np.broadcast_to(r, (q, r.size)), Q], axis=1)
        z_enc, c_enc = self.gen_enc.forward(inp)
        e = relu(z_enc)
        z_seed, c_seed = self.gen_seed.forward(e)
        h = h_seed = np.tanh(z_seed)
        c = np.zeros_like(h)
        steps = []
        for _ in range(self.config.lstm_steps):
            h, c, sc = self.lstm.forward(e, h, c)
            steps.append(sc)
        logits, c_head = self.head.forward(h)
        return logits, (z_enc, c_enc, e, c_seed, h_seed, steps, c_head)

    def _generate_backward(self, dlogits, cache):
        z_enc, c_enc, e, c_seed, h_seed, steps, c_head = cache
        dh = self.head.backward(dlogits, c_head)
        dc = np.zeros_like(dh)
        de = np.zeros_like(e)
        for sc in reversed(steps):
            dx, dh, dc = self.lstm.backward(dh, dc, sc)
            de += dx
        dz_seed = dh * (1.0 - h_seed**2)
        de += self.gen_seed.backward(dz_seed, c_seed)
        dinp = self.gen_enc.backward(relu_backward(de, z_enc), c_enc)
        return dinp[:, : self.config.rep_dim].sum(axis=0)

    # -- public API -------------------------------------------------------

    def represent(self, records) -> np.ndarray:
        M, P = _stack_records(records)
        self._check_records(M, P)
        return self._represent_forward(M, P)[0]

    def generate_logits(self, r, queries) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        if r.shape != (self.config.rep_dim,):
            raise ValueError(f"representation must have shape ({self.config.rep_dim},)")
        return self._generate_forward(r, self._query_matrix(queries))[0]

    def generate(self, r, queries) -> np.ndarray:
        """Predicted distributions, one row per query (a single query gives a 1-D vector)."""
        single = isinstance(queries, MeasurementEncoding) or (
            isinstance(queries, np.ndarray) and queries.ndim == 1
        )
        if single:
            queries = [queries]
        p = softmax(self.generate_logits(r, queries))
        return p[0] if single else p

    def state_loss(self, records, accumulate_grad=False, scale=1.0) -> float:
        """Mean cross-entropy over all of a state's measurements, reconstructed from those same records."""
        M, P = _stack_records(records)
        self._check_records(M, P)
        r, rcache = self._represent_forward(M, P)
        logits, gcache = self._generate_forward(r, M)
        loss, dlogits = cross_entropy_from_logits(logits, P)
        n = M.shape[0]
        if accumulate_grad:
            dr = self._generate_backward(dlogits * (scale / n), gcache)
            self._represent_backward(dr, rcache)
        return loss / n


def gqnq_loss(predictions, targets, floor=PROB_FLOOR) -> float:
    """Mean over rows of -sum_k t_k log(max(p_k, floor))."""
    P = np.asarray(predictions, dtype=np.float64)
    T = np.asarray(targets, dtype=np.float64)
    if P.shape != T.shape:
        raise ValueError(f"prediction shape {P.shape} != target shape {T.shape}")
    P2 = P.reshape(-1, P.shape[-1])
    T2 = T.reshape(-1, T.shape[-1])
    return float(-np.sum(T2 * np.log(np.maximum(P2, floor))) / P2.shape[0])


def train_gqnq(model: GqnqModel, states, hyper: TrainHyper | None = None, seed: int = 0) -> TrainResult:
    """Algorithm: each epoch draws ``batch_size`` state indices uniformly with
    replacement, sums their losses, and takes a single Adam step.

    ``states`` is a sequence of record lists (one per fiducial state), each
    covering the full measurement set.
    """
    hyper = hyper or TrainHyper()
    stacked = [_stack_records(s) for s in states]
    if not stacked:
        raise DataError("no fiducial states")
    n_meas = stacked[0][0].shape[0]
    for k, (M, P) in enumerate(stacked):
        if M.shape[0] != n_meas:
            raise DataError(f"state {k} has {M.shape[0]} records, expected {n_meas}")
        model._check_records(M, P)

    rng = np.random.default_rng(seed)
    adam = AdamState()
    params = model.params
    result = TrainResult()
    B = hyper.batch_size
    for epoch in range(hyper.epochs):
        zero_grads(params)
        total = 0.0
        for idx in rng.integers(0, len(stacked), size=B):
            total += model.state_loss(stacked[idx], accumulate_grad=True, scale=1.0 / B)
        total /= B
        if not np.isfinite(total):
            raise TrainingDivergence(f"non-finite GQNQ loss at epoch {epoch}", result.losses)
        result.losses.append(total)
        lr = lr_schedule(epoch, hyper.lr0, hyper.lr_decay, hyper.lr_decay_every)
        adam_update(params, adam, lr)
        if epoch % 500 == 0:
            logger.debug("gqnq epoch %d loss %.6f lr %.2e", epoch, total, lr)
    return result
