"""Classical fidelity and per-state metric summaries."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

NEG_TOL = 1e-12


def classical_fidelity(p, q, squared: bool = False) -> np.ndarray:
    """Bhattacharyya coefficient sum_k sqrt(p_k q_k) along the last axis.

    Round-off negatives down to -1e-12 are clipped; anything below is an error.
    ``squared=True`` returns its square instead.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {q.shape}")
    if np.any(p < -NEG_TOL) or np.any(q < -NEG_TOL):
        raise ValueError("probabilities must be non-negative")
    p, q = np.clip(p, 0.0, None), np.clip(q, 0.0, None)
    f = np.clip(np.sum(np.sqrt(p * q), axis=-1), 0.0, 1.0)
    return f * f if squared else f


@dataclass
class MetricsReport:
    mean: float
    median: float
    q1: float
    q3: float
    min: float
    max: float
    var: float
    count: int

    @classmethod
    def from_values(cls, values) -> "MetricsReport":
        v = np.asarray(values, dtype=np.float64)
        if v.size == 0:
            raise ValueError("no values to summarize")
        q1, med, q3 = np.percentile(v, [25, 50, 75])
        return cls(float(v.mean()), float(med), float(q1), float(q3), float(v.min()), float(v.max()),
                   float(v.var()), int(v.size))

    def to_dict(self) -> dict:
        return asdict(self)
