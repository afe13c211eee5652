"""Digamma/trigamma and the stationarity-equation solvers used by the EM fit.

digamma uses the upward recurrence psi(x) = psi(x+1) - 1/x to reach x >= 10,
then the asymptotic series; absolute error is below 1e-12 on [1e-3, 1e6].
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["digamma", "trigamma", "betaln", "solve_alpha_beta", "solve_s"]

_SHIFT = 10.0


def _asymptotic_digamma(y: np.ndarray) -> np.ndarray:
    inv = 1.0 / y
    inv2 = inv * inv
    series = inv2 * (
        1.0 / 12.0
        - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * 691.0 / 32760.0))))
    )
    return np.log(y) - 0.5 * inv - series


def digamma(x):
    """psi(x) for x > 0; accepts scalars or arrays."""
    arr = np.asarray(x, dtype=np.float64)
    if np.any(arr <= 0):
        raise ValueError("digamma requires x > 0")
    y = arr.copy()
    acc = np.zeros_like(y)
    while True:
        mask = y < _SHIFT
        if not mask.any():
            break
        acc[mask] -= 1.0 / y[mask]
        y[mask] += 1.0
    out = acc + _asymptotic_digamma(y)
    return float(out) if np.isscalar(x) or np.ndim(x) == 0 else out


def trigamma(x):
    """psi'(x) for x > 0; accepts scalars or arrays."""
    arr = np.asarray(x, dtype=np.float64)
    if np.any(arr <= 0):
        raise ValueError("trigamma requires x > 0")
    y = arr.copy()
    acc = np.zeros_like(y)
    while True:
        mask = y < _SHIFT
        if not mask.any():
            break
        acc[mask] += 1.0 / (y[mask] * y[mask])
        y[mask] += 1.0
    inv = 1.0 / y
    inv2 = inv * inv
    series = inv * (
        1.0
        + inv * (0.5 + inv * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 * (1.0 / 30.0 - inv2 * 5.0 / 66.0)))))
    )
    out = acc + series
    return float(out) if np.isscalar(x) or np.ndim(x) == 0 else out


def betaln(a: float, b: float) -> float:
    """log of the Beta function."""
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


_BRACKET = (1e-6, 1e6)


def _bisect_increasing(fn, lo: float, hi: float, target_resid: float = 1e-12, max_iter: int = 200) -> float:
    flo, fhi = fn(lo), fn(hi)
    if flo > 0 or fhi < 0:
        raise ValueError("bracket exhaustion: no root of the stationarity equation in bracket")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if abs(fm) < target_resid or (hi - lo) < 1e-15 * max(1.0, mid):
            return mid
        if fm < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_alpha_beta(w_log_l: float, w_log_1ml: float, init: tuple[float, float] = (1.0, 1.0)) -> tuple[float, float]:
    """Solve psi(a) - psi(a+b) = w_log_l, psi(b) - psi(a+b) = w_log_1ml.

    Newton iteration in log-parameters with coordinate-wise bisection
    fallback; residuals are driven below 1e-9. Raises on bracket exhaustion
    (no solution with both parameters in [1e-6, 1e6]). ``init`` warm-starts
    the Newton phase.
    """
    if not (w_log_l < 0 and w_log_1ml < 0):
        raise ValueError("weighted means of log(lam) and log(1-lam) must be negative")
    lo, hi = _BRACKET
    a = min(max(float(init[0]), lo), hi)
    b = min(max(float(init[1]), lo), hi)

    def residuals(a, b):
        common = digamma(a + b)
        return digamma(a) - common - w_log_l, digamma(b) - common - w_log_1ml

    f1, f2 = residuals(a, b)
    best = max(abs(f1), abs(f2))
    for _ in range(100):
        if best < 1e-10:
            break
        tab = trigamma(a + b)
        j11 = (trigamma(a) - tab) * a  # d/d log a
        j12 = -tab * b
        j21 = -tab * a
        j22 = (trigamma(b) - tab) * b
        det = j11 * j22 - j12 * j21
        if det == 0 or not math.isfinite(det):
            break
        du = -(j22 * f1 - j12 * f2) / det
        dv = -(-j21 * f1 + j11 * f2) / det
        step = 1.0
        improved = False
        for _ in range(40):
            na = min(max(a * math.exp(step * du), lo), hi)
            nb = min(max(b * math.exp(step * dv), lo), hi)
            nf1, nf2 = residuals(na, nb)
            if max(abs(nf1), abs(nf2)) < best:
                a, b, f1, f2 = na, nb, nf1, nf2
                best = max(abs(f1), abs(f2))
                improved = True
                break
            step *= 0.5
        if not improved:
            break

    # Coordinate-wise monotone polish; each residual is increasing in its own
    # parameter, so bisection is safe.
    for _ in range(200):
        f1, f2 = residuals(a, b)
        if max(abs(f1), abs(f2)) < 1e-10:
            break
        a = _bisect_increasing(lambda t: digamma(t) - digamma(t + b) - w_log_l, lo, hi)
        b = _bisect_increasing(lambda t: digamma(t) - digamma(a + t) - w_log_1ml, lo, hi)
    f1, f2 = residuals(a, b)
    if max(abs(f1), abs(f2)) > 1e-9:
        raise ValueError("bracket exhaustion: stationarity equations not solvable to tolerance")
    return a, b


def solve_s(w_log_l: float, n_samples: int) -> tuple[float, bool]:
    """Solve psi((s-1)/2) - psi(s/2) = w_log_l for s in (1, n_samples].

    The left side is strictly increasing in s. Returns (s, clamped); clamped
    is True when the unconstrained root exceeds n_samples and the endpoint is
    returned instead.
    """
    if w_log_l >= 0:
        raise ValueError("weighted mean of log(lam) must be negative")
    n = float(n_samples)
    if n <= 1:
        raise ValueError("n_samples must exceed 1")

    def h(s: float) -> float:
        return digamma((s - 1.0) / 2.0) - digamma(s / 2.0)

    if h(n) < w_log_l:
        return n, True
    lo = 1.0 + 0.5
    while h(lo) > w_log_l:
        lo = 1.0 + (lo - 1.0) / 2.0
        if lo - 1.0 < 1e-300:
            return lo, True
    hi = n
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = h(mid) - w_log_l
        if abs(fm) < 1e-12 or (hi - lo) < 1e-15 * mid:
            return mid, False
        if fm < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), False
