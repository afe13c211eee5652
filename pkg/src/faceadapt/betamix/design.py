"""Design matrix and pairwise association statistics.

The design matrix stacks P predictor rows over N samples, followed by three
factor rows (expression, domain, identity) holding integer label codes as
reals. For every unordered row pair the association statistic is
lam = 1 - rho^2 where rho is the absolute Pearson correlation of the two
rows; lam is the squared sine of the angle between the centered rows, which
is what the Beta mixture models.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FACTORS = ("expression", "domain", "identity")
LAMBDA_EPS = 1e-12

__all__ = ["FACTORS", "DesignMatrix", "PairStats", "build_design_matrix", "pairwise_lambda", "pair_index", "pairs_of"]


@dataclass(frozen=True)
class DesignMatrix:
    rows: np.ndarray  # (P + 3, N) float64, predictors then factor rows
    n_predictors: int

    def __post_init__(self):
        if self.rows.ndim != 2:
            raise ValueError("design matrix must be 2-D")
        if self.rows.shape[0] != self.n_predictors + len(FACTORS):
            raise ValueError("row count must be n_predictors + 3 factor rows")
        if not np.all(np.isfinite(self.rows)):
            raise ValueError("design matrix contains non-finite entries")

    @property
    def n_samples(self) -> int:
        return self.rows.shape[1]

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    def factor_index(self, name: str) -> int:
        return self.n_predictors + FACTORS.index(name)

    def row_kind(self, row: int) -> str:
        if row < self.n_predictors:
            return "predictor"
        return f"factor({FACTORS[row - self.n_predictors]})"


def _encode(values, name: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.dtype.kind in "iu":
        return arr.astype(np.float64)
    if arr.dtype.kind == "f":
        return arr.astype(np.float64)
    # strings and other labels: stable integer codes in sorted label order
    uniq = sorted(set(arr.tolist()))
    if name == "domain":
        order = [d for d in ("source", "target") if d in uniq] + [d for d in uniq if d not in ("source", "target")]
        uniq = order
    lookup = {v: i for i, v in enumerate(uniq)}
    return np.array([lookup[v] for v in arr.tolist()], dtype=np.float64)


def build_design_matrix(features, expression, domain, identity) -> DesignMatrix:
    """Stack per-sample feature vectors (N, P) and the three factor rows."""
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2:
        raise ValueError(f"features must be (n_samples, n_features), got {feats.shape}")
    n = feats.shape[0]
    factor_rows = [_encode(expression, "expression"), _encode(domain, "domain"), _encode(identity, "identity")]
    for name, row in zip(FACTORS, factor_rows):
        if row.shape != (n,):
            raise ValueError(f"{name} labels must have length {n}, got {row.shape}")
    rows = np.vstack([feats.T, np.stack(factor_rows)])
    return DesignMatrix(rows=rows, n_predictors=feats.shape[1])


def pair_index(n_rows: int, a: int, b: int) -> int:
    """Condensed index of pair (a, b), a < b, in lexicographic pair order."""
    if not 0 <= a < b < n_rows:
        raise ValueError(f"bad pair ({a}, {b}) for {n_rows} rows")
    return n_rows * a - a * (a + 1) // 2 + (b - a - 1)


def pairs_of(n_rows: int, k) -> tuple[np.ndarray, np.ndarray]:
    """Invert pair_index for scalar or array k; returns (a, b) arrays."""
    k = np.asarray(k, dtype=np.int64)
    # offsets[a] = first condensed index of row a's pairs
    counts = np.arange(n_rows - 1, -1, -1, dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(counts)[:-1]])
    a = np.searchsorted(offsets, k, side="right") - 1
    b = k - offsets[a] + a + 1
    return a, b


@dataclass(frozen=True)
class PairStats:
    """Association statistics for all unordered row pairs, condensed order."""

    lam: np.ndarray  # (n_rows * (n_rows - 1) / 2,) in [LAMBDA_EPS, 1 - LAMBDA_EPS]
    n_rows: int

    def __len__(self) -> int:
        return self.lam.shape[0]

    def lam_of(self, a: int, b: int) -> float:
        return float(self.lam[pair_index(self.n_rows, a, b)])


def row_correlations(rows: np.ndarray) -> np.ndarray:
    """Absolute Pearson correlation matrix; constant rows correlate 0 with all."""
    rows = np.asarray(rows, dtype=np.float64)
    centered = rows - rows.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(centered, axis=1)
    constant = norms < 1e-300
    safe = np.where(constant, 1.0, norms)
    unit = centered / safe[:, None]
    corr = np.abs(unit @ unit.T)
    corr[constant, :] = 0.0
    corr[:, constant] = 0.0
    np.fill_diagonal(corr, 1.0)
    return np.clip(corr, 0.0, 1.0)


def pairwise_lambda(m: DesignMatrix) -> PairStats:
    """lam = 1 - rho^2 per unordered pair; constant rows pair at lam = 1 - eps."""
    if m.n_samples < 3:
        raise ValueError("need at least 3 samples for pairwise correlations")
    corr = row_correlations(m.rows)
    iu = np.triu_indices(m.n_rows, k=1)
    lam = 1.0 - corr[iu] ** 2
    return PairStats(lam=np.clip(lam, LAMBDA_EPS, 1.0 - LAMBDA_EPS), n_rows=m.n_rows)
