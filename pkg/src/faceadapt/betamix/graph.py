"""Correlation graph over predictors and factors, and feature selection.

Nodes are the P predictor rows plus the three factor rows. An edge connects
every pair deemed nonnull (posterior null probability below tau). A factor's
subgraph is the set of predictor nodes adjacent to it; the selected feature
set is the expression subgraph minus anything also adjacent to the domain or
identity factors.
"""

from __future__ import annotations

import csv
import os
import warnings
from dataclasses import dataclass

import numpy as np

from .design import FACTORS, PairStats, pairs_of, row_correlations
from .em import FittedBetaMix

__all__ = [
    "FeatureGraph",
    "build_graph",
    "factor_subgraph",
    "select_expression_features",
    "threshold_sweep",
    "write_edges",
    "read_edges",
    "graph_from_edges",
]


@dataclass(frozen=True)
class FeatureGraph:
    n_nodes: int  # P + 3
    n_predictors: int
    edges: frozenset  # of (a, b) tuples with a < b

    def factor_node(self, factor: str) -> int:
        return self.n_predictors + FACTORS.index(factor)

    def neighbors(self, node: int) -> set:
        out = set()
        for a, b in self.edges:
            if a == node:
                out.add(b)
            elif b == node:
                out.add(a)
        return out


def build_graph(fit: FittedBetaMix, tau: float | None = None) -> FeatureGraph:
    """Edges are exactly the pairs whose posterior null probability is < tau."""
    tau = fit.tau if tau is None else tau
    ks = np.nonzero(fit.posteriors < tau)[0]
    a, b = pairs_of(fit.n_rows, ks)
    edges = frozenset((int(x), int(y)) for x, y in zip(a, b))
    return FeatureGraph(n_nodes=fit.n_rows, n_predictors=fit.n_rows - len(FACTORS), edges=edges)


def factor_subgraph(graph: FeatureGraph, factor: str) -> set:
    """Predictor nodes adjacent to the chosen factor node."""
    node = graph.factor_node(factor)
    return {n for n in graph.neighbors(node) if n < graph.n_predictors}


def select_expression_features(graph: FeatureGraph) -> set:
    """Expression subgraph minus the domain and identity subgraphs."""
    selected = factor_subgraph(graph, "expression") - factor_subgraph(graph, "domain") - factor_subgraph(graph, "identity")
    if not selected:
        warnings.warn("feature selection is empty: no expression-only predictors survived pruning")
    return selected


def threshold_sweep(features, expression_labels, thresholds) -> dict:
    """Per correlation threshold t, predictors with |corr(feature, label)| >= t.

    features is (n_samples, n_features); returns {t: sorted index array}.
    """
    feats = np.asarray(features, dtype=np.float64)
    labels = np.asarray(expression_labels, dtype=np.float64)
    rows = np.vstack([feats.T, labels[None, :]])
    corr = row_correlations(rows)[-1, :-1]
    return {float(t): np.nonzero(corr >= float(t))[0] for t in thresholds}


def write_edges(path: str | os.PathLike, fit: FittedBetaMix, pair_stats: PairStats, tau: float | None = None) -> None:
    """Persist nonnull pairs only: CSV node_a,node_b,lambda,posterior_null."""
    tau = fit.tau if tau is None else tau
    ks = np.nonzero(fit.posteriors < tau)[0]
    a, b = pairs_of(fit.n_rows, ks)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_a", "node_b", "lambda", "posterior_null"])
        for k, x, y in zip(ks, a, b):
            writer.writerow([int(x), int(y), repr(float(pair_stats.lam[k])), repr(float(fit.posteriors[k]))])


def read_edges(path: str | os.PathLike) -> list[tuple[int, int, float, float]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["node_a", "node_b", "lambda", "posterior_null"]:
            raise ValueError(f"{path}: unexpected edge-file header {header!r}")
        return [(int(a), int(b), float(lam), float(post)) for a, b, lam, post in reader]


def graph_from_edges(edges, n_nodes: int) -> FeatureGraph:
    pairs = frozenset((min(int(a), int(b)), max(int(a), int(b))) for a, b, *_ in edges)
    return FeatureGraph(n_nodes=n_nodes, n_predictors=n_nodes - len(FACTORS), edges=pairs)
