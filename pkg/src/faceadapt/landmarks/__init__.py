from .delaunay import Triangulation, delaunay_triangulate, load_topology, save_topology
from .features import (
    FeatureDescriptor,
    LandmarkFeatureExtractor,
    extract_feature_vector,
    feature_descriptors,
    fit_reference_topology,
    pairwise_distances,
    triangle_features,
)

__all__ = [
    "Triangulation",
    "delaunay_triangulate",
    "load_topology",
    "save_topology",
    "FeatureDescriptor",
    "LandmarkFeatureExtractor",
    "extract_feature_vector",
    "feature_descriptors",
    "fit_reference_topology",
    "pairwise_distances",
    "triangle_features",
]
