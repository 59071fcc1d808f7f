"""Dense, ReLU, softmax and LSTM primitives with hand-written backward passes.

Forward functions return ``(output, cache)``; backward functions take the
upstream gradient and that cache.  All arrays are float64 and may carry a
leading batch axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PROB_FLOOR = 1e-12


@dataclass
class Param:
    name: str
    values: np.ndarray
    grad: np.ndarray = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.grad is None:
            self.grad = np.zeros_like(self.values)

    @property
    def shape(self):
        return self.values.shape

    def zero_grad(self):
        self.grad[...] = 0.0


def uniform_init(rng, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


# -- elementwise --------------------------------------------------------------

def relu(x):
    return np.maximum(x, 0.0)


def relu_backward(dy, x):
    # subgradient at 0 is 0
    return dy * (x > 0)


def sigmoid(x):
    # branch-free stable form
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def softmax(x, axis=-1):
    z = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax(x, axis=-1):
    z = x - np.max(x, axis=axis, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=axis, keepdims=True))


def softmax_backward(dp, p, axis=-1):
    return p * (dp - np.sum(dp * p, axis=axis, keepdims=True))


def cross_entropy_from_logits(logits, targets, floor=PROB_FLOOR):
    """Sum over rows of -sum_k t_k log(max(p_k, floor)) with p = softmax(logits).

    Returns ``(loss, dlogits)``.  Components clipped at the floor contribute
    no gradient.
    """
    logp = log_softmax(logits)
    log_floor = np.log(floor)
    live = logp > log_floor
    loss = -float(np.sum(targets * np.where(live, logp, log_floor)))
    p = np.exp(logp)
    t_live = targets * live
    dlogits = p * t_live.sum(axis=-1, keepdims=True) - t_live
    return loss, dlogits


# -- dense --------------------------------------------------------------------

def dense_forward(W, b, x):
    if x.shape[-1] != W.shape[1] or b.shape != (W.shape[0],):
        raise ValueError(f"shape mismatch: W {W.shape}, b {b.shape}, x {x.shape}")
    return x @ W.T + b, x


def dense_backward(dy, W, x):
    """Returns (dW, db, dx) for y = x W^T + b."""
    x2 = x.reshape(-1, x.shape[-1])
    dy2 = dy.reshape(-1, dy.shape[-1])
    return dy2.T @ x2, dy2.sum(axis=0), dy @ W


class Dense:
    def __init__(self, n_in, n_out, rng, name="dense"):
        self.W = Param(f"{name}.W", uniform_init(rng, n_in, (n_out, n_in)))
        self.b = Param(f"{name}.b", uniform_init(rng, n_in, (n_out,)))

    @property
    def params(self):
        return [self.W, self.b]

    def forward(self, x):
        return dense_forward(self.W.values, self.b.values, x)

    def backward(self, dy, cache):
        dW, db, dx = dense_backward(dy, self.W.values, cache)
        self.W.grad += dW
        self.b.grad += db
        return dx


class MLP:
    """Dense stack with ReLU between layers; the last layer is linear."""

    def __init__(self, sizes, rng, name="mlp", final_relu=False):
        self.sizes = list(sizes)
        self.layers = [
            Dense(a, b, rng, name=f"{name}.{i}") for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:]))
        ]
        self.final_relu = final_relu

    @property
    def params(self):
        return [p for layer in self.layers for p in layer.params]

    def forward(self, x):
        caches = []
        last = len(self.layers) - 1
        for i, layer in enumerate(self.layers):
            z, c = layer.forward(x)
            act = i < last or self.final_relu
            caches.append((c, z if act else None))
            x = relu(z) if act else z
        return x, caches

    def backward(self, dy, caches):
        for layer, (c, z) in zip(reversed(self.layers), reversed(caches)):
            if z is not None:
                dy = relu_backward(dy, z)
            dy = layer.backward(dy, c)
        return dy


# -- LSTM ---------------------------------------------------------------------

class LSTMCell:
    """Standard LSTM cell; gate blocks in the order input, forget, output, candidate."""

    def __init__(self, n_in, hidden, rng, name="lstm"):
        self.n_in, self.hidden = n_in, hidden
        fan = n_in + hidden
        self.Wx = Param(f"{name}.Wx", uniform_init(rng, fan, (4 * hidden, n_in)))
        self.Wh = Param(f"{name}.Wh", uniform_init(rng, fan, (4 * hidden, hidden)))
        self.b = Param(f"{name}.b", uniform_init(rng, fan, (4 * hidden,)))

    @property
    def params(self):
        return [self.Wx, self.Wh, self.b]

    def forward(self, x, h, c):
        return lstm_cell_step(self.Wx.values, self.Wh.values, self.b.values, x, h, c)

    def backward(self, dh, dc, cache):
        dWx, dWh, db, dx, dh_prev, dc_prev = lstm_cell_backward(dh, dc, cache)
        self.Wx.grad += dWx
        self.Wh.grad += dWh
        self.b.grad += db
        return dx, dh_prev, dc_prev


def lstm_cell_step(Wx, Wh, b, x, h, c):
    H = Wh.shape[1]
    if x.shape[-1] != Wx.shape[1] or h.shape[-1] != H or c.shape != h.shape or Wx.shape[0] != 4 * H:
        raise ValueError(f"LSTM shape mismatch: Wx {Wx.shape}, Wh {Wh.shape}, x {x.shape}, h {h.shape}")
    a = x @ Wx.T + h @ Wh.T + b
    i = sigmoid(a[..., :H])
    f = sigmoid(a[..., H : 2 * H])
    o = sigmoid(a[..., 2 * H : 3 * H])
    g = np.tanh(a[..., 3 * H :])
    c_new = f * c + i * g
    tc = np.tanh(c_new)
    h_new = o * tc
    cache = (Wx, Wh, x, h, c, i, f, o, g, tc)
    return h_new, c_new, cache


def lstm_cell_backward(dh, dc, cache):
    Wx, Wh, x, h, c, i, f, o, g, tc = cache
    do = dh * tc
    dc = dc + dh * o * (1.0 - tc**2)
    di = dc * g
    dg = dc * i
    df = dc * c
    dc_prev = dc * f
    da = np.concatenate(
        [di * i * (1 - i), df * f * (1 - f), do * o * (1 - o), dg * (1 - g**2)], axis=-1
    )
    da2 = da.reshape(-1, da.shape[-1])
    dWx = da2.T @ x.reshape(-1, x.shape[-1])
    dWh = da2.T @ h.reshape(-1, h.shape[-1])
    db = da2.sum(axis=0)
    return dWx, dWh, db, da @ Wx, da @ Wh, dc_prev
