from .design import FACTORS, DesignMatrix, PairStats, build_design_matrix, pair_index, pairs_of, pairwise_lambda
from .em import FittedBetaMix, betamix_em
from .graph import (
    FeatureGraph,
    build_graph,
    factor_subgraph,
    graph_from_edges,
    read_edges,
    select_expression_features,
    threshold_sweep,
    write_edges,
)
from .selector import BetaMixSelector
from .special import betaln, digamma, solve_alpha_beta, solve_s, trigamma

__all__ = [
    "FACTORS",
    "DesignMatrix",
    "PairStats",
    "build_design_matrix",
    "pair_index",
    "pairs_of",
    "pairwise_lambda",
    "FittedBetaMix",
    "betamix_em",
    "FeatureGraph",
    "build_graph",
    "factor_subgraph",
    "graph_from_edges",
    "read_edges",
    "select_expression_features",
    "threshold_sweep",
    "write_edges",
    "BetaMixSelector",
    "betaln",
    "digamma",
    "solve_alpha_beta",
    "solve_s",
    "trigamma",
]
