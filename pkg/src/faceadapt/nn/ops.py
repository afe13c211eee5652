"""Differentiable operations: exactly the layers the models need.

Convolutions are 3x3, stride 1, zero-padded to preserve spatial size; max
pooling is 2x2 stride 2 with ties routed to the first occurrence in
row-major window order. Dropout is inverted (scaled by 1/(1-p) at train
time) and is the identity at eval time.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import Tensor, result

__all__ = [
    "dense",
    "relu",
    "dropout",
    "conv2d",
    "maxpool2",
    "concat",
    "flatten",
    "add",
    "scale",
    "weighted_sum",
    "softmax",
    "softmax_cross_entropy",
]


def dense(x: Tensor, W: Tensor, b: Tensor) -> Tensor:
    """x [B, in] @ W [in, out] + b [out]."""
    if x.data.ndim != 2 or W.data.ndim != 2 or x.data.shape[1] != W.data.shape[0]:
        raise ValueError(f"dense shape mismatch: x {x.data.shape}, W {W.data.shape}")
    if b.data.shape != (W.data.shape[1],):
        raise ValueError(f"dense bias shape {b.data.shape} does not match out dim {W.data.shape[1]}")
    out = x.data @ W.data + b.data

    def backward(g):
        x.accumulate(g @ W.data.T)
        W.accumulate(x.data.T @ g)
        b.accumulate(g.sum(axis=0))

    return result(out, (x, W, b), backward)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0

    def backward(g):
        x.accumulate(g * mask)

    return result(np.where(mask, x.data, 0), (x,), backward)


def dropout(x: Tensor, p: float, training: bool, rng: np.random.Generator | None = None) -> Tensor:
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    if not training or p == 0.0:
        return x
    if rng is None:
        raise ValueError("dropout at training time needs an rng")
    keep = (rng.uniform(size=x.data.shape) >= p).astype(x.data.dtype) / (1.0 - p)

    def backward(g):
        x.accumulate(g * keep)

    return result(x.data * keep, (x,), backward)


def _windows3(padded: np.ndarray) -> np.ndarray:
    # (B, C, H, W, 3, 3) view of all 3x3 neighborhoods
    return sliding_window_view(padded, (3, 3), axis=(2, 3))


def conv2d(x: Tensor, k: Tensor) -> Tensor:
    """3x3 convolution, stride 1, zero padding; x [B,C_in,H,W], k [C_out,C_in,3,3]."""
    if x.data.ndim != 4 or k.data.ndim != 4 or k.data.shape[2:] != (3, 3):
        raise ValueError(f"conv2d expects x [B,C,H,W] and k [O,C,3,3]; got {x.data.shape}, {k.data.shape}")
    if x.data.shape[1] != k.data.shape[1]:
        raise ValueError(f"conv2d channel mismatch: x has {x.data.shape[1]}, k expects {k.data.shape[1]}")
    xp = np.pad(x.data, ((0, 0), (0, 0), (1, 1), (1, 1)))
    out = np.einsum("bchwij,ocij->bohw", _windows3(xp), k.data, optimize=True)

    def backward(g):
        k.accumulate(np.einsum("bohw,bchwij->ocij", g, _windows3(xp), optimize=True))
        gp = np.pad(g, ((0, 0), (0, 0), (1, 1), (1, 1)))
        kflip = k.data[:, :, ::-1, ::-1]
        x.accumulate(np.einsum("bohwij,ocij->bchw", _windows3(gp), kflip, optimize=True))

    return result(out.astype(x.data.dtype, copy=False), (x, k), backward)


def maxpool2(x: Tensor) -> Tensor:
    """2x2 max pooling, stride 2; spatial dims must be even."""
    B, C, H, W = x.data.shape
    if H % 2 or W % 2:
        raise ValueError(f"maxpool2 requires even spatial dims, got {H}x{W}")
    win = x.data.reshape(B, C, H // 2, 2, W // 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(B, C, H // 2, W // 2, 4)
    arg = win.argmax(axis=-1)  # first max in row-major window order
    out = np.take_along_axis(win, arg[..., None], axis=-1)[..., 0]

    def backward(g):
        gwin = np.zeros_like(win)
        np.put_along_axis(gwin, arg[..., None], g[..., None], axis=-1)
        gx = gwin.reshape(B, C, H // 2, W // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(B, C, H, W)
        x.accumulate(gx)

    return result(out, (x,), backward)


def concat(a: Tensor, b: Tensor) -> Tensor:
    """Concatenate along the feature axis: [B, m] ++ [B, n] -> [B, m + n]."""
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[0] != b.data.shape[0]:
        raise ValueError(f"concat needs matching batch dims: {a.data.shape} vs {b.data.shape}")
    m = a.data.shape[1]

    def backward(g):
        a.accumulate(g[:, :m])
        b.accumulate(g[:, m:])

    return result(np.concatenate([a.data, b.data], axis=1), (a, b), backward)


def flatten(x: Tensor) -> Tensor:
    """[B, ...] -> [B, prod(...)]."""
    B = x.data.shape[0]
    shape = x.data.shape

    def backward(g):
        x.accumulate(g.reshape(shape))

    return result(x.data.reshape(B, -1), (x,), backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ValueError(f"add shape mismatch: {a.data.shape} vs {b.data.shape}")

    def backward(g):
        a.accumulate(g)
        b.accumulate(g)

    return result(a.data + b.data, (a, b), backward)


def scale(x: Tensor, c: float) -> Tensor:
    def backward(g):
        x.accumulate(g * c)

    return result(x.data * c, (x,), backward)


def weighted_sum(x: Tensor, weights: np.ndarray) -> Tensor:
    """Scalar projection sum(x * weights); weights are constants."""
    w = np.asarray(weights, dtype=x.data.dtype)
    if w.shape != x.data.shape:
        raise ValueError(f"weights shape {w.shape} does not match {x.data.shape}")

    def backward(g):
        x.accumulate(g * w)

    return result(np.array((x.data * w).sum(), dtype=x.data.dtype), (x,), backward)


def _log_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def softmax(x: Tensor) -> Tensor:
    p = np.exp(_log_softmax(x.data))

    def backward(g):
        dot = (g * p).sum(axis=1, keepdims=True)
        x.accumulate(p * (g - dot))

    return result(p, (x,), backward)


def softmax_cross_entropy(logits: Tensor, labels, sample_weights=None) -> Tensor:
    """Mean (sample-weighted) cross entropy of softmax(logits) at integer labels."""
    y = np.asarray(labels, dtype=np.int64)
    B, K = logits.data.shape
    if y.shape != (B,):
        raise ValueError(f"labels must have shape ({B},), got {y.shape}")
    if y.min() < 0 or y.max() >= K:
        raise ValueError("labels out of range")
    w = np.ones(B, dtype=logits.data.dtype) if sample_weights is None else np.asarray(sample_weights, dtype=logits.data.dtype)
    logp = _log_softmax(logits.data)
    loss = -(w * logp[np.arange(B), y]).sum() / B

    def backward(g):
        p = np.exp(logp)
        p[np.arange(B), y] -= 1.0
        logits.accumulate(g * p * (w / B)[:, None])

    return result(np.array(loss, dtype=logits.data.dtype), (logits,), backward)
