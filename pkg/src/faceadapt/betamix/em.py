"""EM fit of the two-component Beta mixture over pairwise statistics.

The null component Beta((s-1)/2, 1/2) describes pairs whose rows are
mutually perpendicular up to sampling noise; s is an effective sample size
estimated jointly with the alternative component Beta(alpha, beta) and the
null mass p0. Posterior null probabilities drive the screening rule: the
largest lam among pairs with posterior below tau defines Q, equivalently a
minimum significant correlation rho_min = sqrt(1 - Q).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .design import PairStats
from .special import betaln, solve_alpha_beta, solve_s

__all__ = ["FittedBetaMix", "betamix_em"]

_P0_FLOOR = 1e-12


@dataclass(frozen=True)
class FittedBetaMix:
    alpha: float
    beta: float
    s: float
    p0: float
    posteriors: np.ndarray  # per-pair posterior null probability, condensed order
    q: float | None  # max lam among pairs deemed nonnull; None if none pass tau
    rho_min: float | None  # sqrt(1 - q)
    log_likelihood_trace: tuple[float, ...]
    converged: bool
    iterations: int
    n_rows: int
    n_samples: int
    tau: float
    s_clamped: bool

    def summary_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "s": self.s,
            "p0": self.p0,
            "tau": self.tau,
            "Q": self.q,
            "rho_min": self.rho_min,
            "converged": self.converged,
            "iterations": self.iterations,
        }


def _log_null(loglam: np.ndarray, log1mlam: np.ndarray, s: float) -> np.ndarray:
    a0 = (s - 1.0) / 2.0
    return -betaln(a0, 0.5) + (a0 - 1.0) * loglam - 0.5 * log1mlam


def _log_alt(loglam: np.ndarray, log1mlam: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    return -betaln(alpha, beta) + (alpha - 1.0) * loglam + (beta - 1.0) * log1mlam


def _observed_ll(loglam, log1mlam, alpha, beta, s, p0) -> float:
    p0c = min(max(p0, _P0_FLOOR), 1.0 - _P0_FLOOR)
    a = math.log(p0c) + _log_null(loglam, log1mlam, s)
    b = math.log(1.0 - p0c) + _log_alt(loglam, log1mlam, alpha, beta)
    return float(np.sum(np.logaddexp(a, b)))


def betamix_em(
    pair_stats: PairStats,
    n_samples: int,
    tau: float = 0.05,
    max_iter: int = 1000,
    tol: float = 1e-6,
    init: tuple[float, float, float, float] | None = None,
) -> FittedBetaMix:
    """Fit the mixture by EM; returns posteriors and the screening threshold.

    init is (p0, alpha, beta, s); defaults to (0.9, 1, 1, n_samples). The fit
    stops when the max relative change of (alpha, beta, s, p0) drops below
    tol, and is flagged non-converged if max_iter is exhausted first.
    """
    lam = np.asarray(pair_stats.lam, dtype=np.float64)
    if lam.shape[0] < 10:
        raise ValueError("need at least 10 pairs to fit the mixture")
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    p0, alpha, beta, s = init if init is not None else (0.9, 1.0, 1.0, float(n_samples))

    loglam = np.log(lam)
    log1mlam = np.log1p(-lam)
    trace = [_observed_ll(loglam, log1mlam, alpha, beta, s, p0)]
    s_clamped = False
    converged = False
    iterations = 0
    posteriors = np.full_like(lam, p0)

    for iterations in range(1, max_iter + 1):
        prev = np.array([alpha, beta, s, p0])

        # E-step: posterior null probability per pair
        p0c = min(max(p0, _P0_FLOOR), 1.0 - _P0_FLOOR)
        gap = (math.log(1.0 - p0c) + _log_alt(loglam, log1mlam, alpha, beta)) - (
            math.log(p0c) + _log_null(loglam, log1mlam, s)
        )
        posteriors = 1.0 / (1.0 + np.exp(gap))

        # M-step
        p0 = float(posteriors.mean())
        w_alt = 1.0 - posteriors
        total_alt = float(w_alt.sum())
        if total_alt > 1e-12:
            mean_log = float(w_alt @ loglam) / total_alt
            mean_log1m = float(w_alt @ log1mlam) / total_alt
            if mean_log < 0 and mean_log1m < 0:
                alpha, beta = solve_alpha_beta(mean_log, mean_log1m, init=(alpha, beta))
        total_null = float(posteriors.sum())
        if total_null > 1e-12:
            mean_log_null = float(posteriors @ loglam) / total_null
            if mean_log_null < 0:
                s, s_clamped = solve_s(mean_log_null, n_samples)

        trace.append(_observed_ll(loglam, log1mlam, alpha, beta, s, p0))
        rel = np.abs(np.array([alpha, beta, s, p0]) - prev) / np.maximum(np.abs(prev), 1e-12)
        if float(rel.max()) < tol:
            converged = True
            break

    nonnull = posteriors < tau
    q = float(lam[nonnull].max()) if np.any(nonnull) else None
    rho_min = math.sqrt(1.0 - q) if q is not None else None
    return FittedBetaMix(
        alpha=alpha,
        beta=beta,
        s=s,
        p0=p0,
        posteriors=posteriors,
        q=q,
        rho_min=rho_min,
        log_likelihood_trace=tuple(trace),
        converged=converged,
        iterations=iterations,
        n_rows=pair_stats.n_rows,
        n_samples=n_samples,
        tau=tau,
        s_clamped=s_clamped,
    )
