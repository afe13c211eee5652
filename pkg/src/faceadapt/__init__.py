"""Geometric landmark features, Beta-mixture correlation screening, and
dual-stream domain adaptation for cross-age facial expression classification."""

from .adapt import DomainData, DualStreamClassifier, TrainConfig, TrainHistory, train
from .betamix import BetaMixSelector, betamix_em, build_design_matrix, pairwise_lambda
from .crossval import EvalReport, FoldPlan, subject_disjoint_folds
from .landmarks import LandmarkFeatureExtractor, delaunay_triangulate, extract_feature_vector
from .metrics import confusion, f1_overall, roc_auc_ovr
from .models import Network, NetworkSpec, build_cnn, build_fusion, build_mlp, load_network, save_network
from .pipeline import PipelineConfig, load_pipeline_data, nested_cv
from .synth import SynthSpec, synth_generate

__version__ = "0.1.0"

__all__ = [
    "DomainData",
    "DualStreamClassifier",
    "TrainConfig",
    "TrainHistory",
    "train",
    "BetaMixSelector",
    "betamix_em",
    "build_design_matrix",
    "pairwise_lambda",
    "EvalReport",
    "FoldPlan",
    "subject_disjoint_folds",
    "LandmarkFeatureExtractor",
    "delaunay_triangulate",
    "extract_feature_vector",
    "confusion",
    "f1_overall",
    "roc_auc_ovr",
    "Network",
    "NetworkSpec",
    "build_cnn",
    "build_fusion",
    "build_mlp",
    "load_network",
    "save_network",
    "PipelineConfig",
    "load_pipeline_data",
    "nested_cv",
    "SynthSpec",
    "synth_generate",
]
