"""Adam and the learning-rate schedule."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_update(params, state: AdamState, lr: float, grad_scale: float = 1.0):
    """One bias-corrected Adam step over ``params`` using their ``grad`` fields.

    ``grad_scale`` multiplies every gradient before it enters the moments.
    """
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for p in params:
        g = p.grad * grad_scale
        m = state.m.get(p.name)
        if m is None:
            m = state.m[p.name] = np.zeros_like(p.values)
            state.v[p.name] = np.zeros_like(p.values)
        v = state.v[p.name]
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        p.values -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


def zero_grads(params):
    for p in params:
        p.zero_grad()


def lr_schedule(epoch: int, lr0: float = 0.01, decay: float = 0.95, every: int = 1) -> float:
    """lr0 * decay ** (epoch / every); ``every=1`` gives the per-epoch 0.95 decay."""
    return lr0 * decay ** (epoch / every)
