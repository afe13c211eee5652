"""Adam optimizer and the triangular cyclical learning-rate schedule."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import Tensor

__all__ = ["AdamState", "adam_step", "LrSchedule", "triangular_lr"]


@dataclass
class AdamState:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)  # id(param) -> first moment
    v: dict = field(default_factory=dict)  # id(param) -> second moment


def adam_step(params: list[Tensor], state: AdamState, lr: float) -> None:
    """One bias-corrected Adam update; gradients are read from param.grad."""
    if lr <= 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1**state.step
    bc2 = 1.0 - b2**state.step
    for p in params:
        g = p.grad
        if g is None:
            continue
        key = id(p)
        if key not in state.m:
            state.m[key] = np.zeros_like(p.data)
            state.v[key] = np.zeros_like(p.data)
        m = state.m[key]
        v = state.v[key]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p.data -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


@dataclass(frozen=True)
class LrSchedule:
    zeta_min: float = 1e-5
    zeta_max: float = 1e-3
    step_size: int = 100  # iterations per half-cycle

    def __post_init__(self):
        if not 0 < self.zeta_min <= self.zeta_max:
            raise ValueError("need 0 < zeta_min <= zeta_max")
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")


def triangular_lr(iteration: int, sched: LrSchedule) -> float:
    """Piecewise-linear wave: min -> max over step_size iterations, then back."""
    if iteration < 0:
        raise ValueError("iteration must be nonnegative")
    x = (iteration % (2 * sched.step_size)) / sched.step_size  # in [0, 2)
    return sched.zeta_min + (sched.zeta_max - sched.zeta_min) * (1.0 - abs(x - 1.0))
