"""sklearn-style feature selector backed by the Beta-mixture screen."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array

from .design import build_design_matrix, pairwise_lambda
from .em import betamix_em
from .graph import build_graph, factor_subgraph, select_expression_features

__all__ = ["BetaMixSelector"]


class BetaMixSelector(BaseEstimator):
    """Select predictors correlated with expression but not domain/identity.

    fit(X, factors) expects X of shape (n_samples, n_features) and factors of
    shape (n_samples, 3) holding (expression, domain, identity) codes per
    sample. transform keeps only the selected columns.
    """

    def __init__(self, tau: float = 0.05, max_iter: int = 1000, tol: float = 1e-6):
        self.tau = tau
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, factors):
        X = check_array(X, dtype=np.float64)
        factors = check_array(factors, dtype=None, ensure_2d=True)
        if factors.shape != (X.shape[0], 3):
            raise ValueError(f"factors must have shape (n_samples, 3), got {factors.shape}")
        design = build_design_matrix(X, factors[:, 0], factors[:, 1], factors[:, 2])
        stats = pairwise_lambda(design)
        self.fit_ = betamix_em(stats, n_samples=design.n_samples, tau=self.tau, max_iter=self.max_iter, tol=self.tol)
        self.graph_ = build_graph(self.fit_)
        self.subgraphs_ = {name: factor_subgraph(self.graph_, name) for name in ("expression", "domain", "identity")}
        selected = select_expression_features(self.graph_)
        self.selected_indices_ = np.array(sorted(selected), dtype=np.int64)
        self.n_features_in_ = X.shape[1]
        return self

    def get_support(self, indices: bool = False):
        if indices:
            return self.selected_indices_.copy()
        mask = np.zeros(self.n_features_in_, dtype=bool)
        mask[self.selected_indices_] = True
        return mask

    def transform(self, X) -> np.ndarray:
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, selector was fit with {self.n_features_in_}")
        return X[:, self.selected_indices_]

    def fit_transform(self, X, factors) -> np.ndarray:
        return self.fit(X, factors).transform(X)
