"""Central finite-difference helpers shared by the gradient tests."""

import numpy as np


def numeric_grad(f, x, h=1e-6):
    """Central differences of scalar ``f()`` w.r.t. array ``x`` (perturbed in place)."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = x[i]
        x[i] = old + h
        fp = f()
        x[i] = old - h
        fm = f()
        x[i] = old
        g[i] = (fp - fm) / (2 * h)
    return g


def rel_error(a, b):
    a, b = np.asarray(a), np.asarray(b)
    denom = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-8)
    return float(np.max(np.abs(a - b)) / denom)


def check_param_grads(loss, params, tol=1e-5, max_entries=None):
    """Compare the ``grad`` fields of ``params`` with finite differences of ``loss``."""
    worst = 0.0
    for p in params:
        num = numeric_grad(loss, p.values)
        err = rel_error(p.grad, num)
        worst = max(worst, err)
        assert err < tol, f"{p.name}: relative error {err:.2e}"
    return worst
