"""Finite-difference verification of reverse-mode gradients.

Gradients are compared against central differences (h = 1e-4) in double
precision. Non-scalar outputs are reduced through a fixed random projection
so every output element contributes to the checked gradient.
"""

from __future__ import annotations

import numpy as np

from .tensor import Tensor
from .ops import weighted_sum

__all__ = ["grad_check"]


def grad_check(fn, inputs, seed: int = 0, h: float = 1e-4) -> float:
    """Max elementwise relative error between autodiff and finite differences.

    fn maps Tensors (one per entry of ``inputs``) to a Tensor; inputs are
    arrays, promoted to float64.
    """
    arrays = [np.asarray(x, dtype=np.float64) for x in inputs]
    rng = np.random.default_rng(seed)

    tensors = [Tensor(a.copy(), requires_grad=True) for a in arrays]
    out = fn(*tensors)
    proj = rng.standard_normal(out.data.shape)
    loss = weighted_sum(out, proj) if out.data.size > 1 else out
    loss.backward()
    analytic = [t.grad if t.grad is not None else np.zeros_like(t.data) for t in tensors]

    def value(arrs) -> float:
        o = fn(*[Tensor(a) for a in arrs]).data
        return float((o * proj).sum()) if o.size > 1 else float(o)

    worst = 0.0
    for idx, a in enumerate(arrays):
        num = np.zeros_like(a)
        flat = a.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + h
            f_plus = value(arrays)
            flat[j] = orig - h
            f_minus = value(arrays)
            flat[j] = orig
            num.reshape(-1)[j] = (f_plus - f_minus) / (2.0 * h)
        denom = np.maximum(np.maximum(np.abs(analytic[idx]), np.abs(num)), 1e-8)
        err = np.abs(analytic[idx] - num)
        err[(np.abs(analytic[idx]) < 1e-12) & (np.abs(num) < 1e-12)] = 0.0
        worst = max(worst, float((err / denom).max()))
    return worst
