"""Geometric predictors derived from facial landmarks.

Feature order is fixed: all inter-landmark Euclidean distances first (pairs
(i, j) with i < j in lexicographic order, 2278 of them for 68 landmarks),
then per triangle of the shared topology [area, angle@i, angle@j, angle@k].
The topology is fitted once on the mean training landmarks and reused for
every sample, so feature indices mean the same thing across samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ..validation import N_LANDMARKS, as_landmarks
from .delaunay import Triangulation, delaunay_triangulate

__all__ = [
    "FeatureDescriptor",
    "pairwise_distances",
    "triangle_features",
    "fit_reference_topology",
    "feature_descriptors",
    "extract_feature_vector",
    "LandmarkFeatureExtractor",
]


@dataclass(frozen=True)
class FeatureDescriptor:
    """What one feature index measures: a pair distance, triangle area, or angle."""

    kind: str  # "distance" | "area" | "angle"
    indices: tuple[int, ...]  # 2 landmark indices for distance, 3 for area/angle
    vertex: int | None = None  # for angles, which of the indices is the vertex

    def to_json(self) -> dict:
        obj = {"kind": self.kind, "indices": list(self.indices)}
        if self.vertex is not None:
            obj["vertex"] = self.vertex
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "FeatureDescriptor":
        return cls(kind=obj["kind"], indices=tuple(obj["indices"]), vertex=obj.get("vertex"))


def pairwise_distances(landmarks) -> np.ndarray:
    """Euclidean distances for all landmark pairs i < j, lexicographic in (i, j)."""
    lm = as_landmarks(landmarks, n_points=None)
    i, j = np.triu_indices(lm.shape[0], k=1)
    return np.linalg.norm(lm[i] - lm[j], axis=1)


def _angles(p: np.ndarray, q: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Angle at p between rays p->q and p->r, by clamped cosine (degenerate-safe)."""
    u = q - p
    v = r - p
    denom = np.linalg.norm(u, axis=-1) * np.linalg.norm(v, axis=-1)
    cos = np.einsum("...k,...k->...", u, v) / np.maximum(denom, np.finfo(np.float64).tiny)
    return np.arccos(np.clip(cos, -1.0, 1.0))


def triangle_features(landmarks, topology: Triangulation) -> np.ndarray:
    """Per triangle, in topology order: [area, angle@i, angle@j, angle@k]."""
    lm = as_landmarks(landmarks, n_points=None)
    tri = np.asarray(topology.triangles, dtype=np.int64)
    if tri.size and tri.max() >= lm.shape[0]:
        raise ValueError("topology references landmark indices beyond the input")
    a, b, c = lm[tri[:, 0]], lm[tri[:, 1]], lm[tri[:, 2]]
    ab = b - a
    ac = c - a
    area = 0.5 * np.abs(ab[:, 0] * ac[:, 1] - ab[:, 1] * ac[:, 0])
    out = np.empty((len(tri), 4), dtype=np.float64)
    out[:, 0] = area
    out[:, 1] = _angles(a, b, c)
    out[:, 2] = _angles(b, a, c)
    out[:, 3] = _angles(c, a, b)
    return out.ravel()


def fit_reference_topology(*datasets) -> Triangulation:
    """Triangulate the element-wise mean landmarks over all samples given.

    Accepts ``Dataset`` objects (samples must carry landmarks) and/or arrays
    of shape (n_samples, 68, 2).
    """
    stacks = []
    for d in datasets:
        if hasattr(d, "samples"):
            lms = [s.landmarks for s in d.samples]
            if any(lm is None for lm in lms):
                raise ValueError("dataset contains samples without landmarks")
            stacks.append(np.stack(lms))
        else:
            arr = np.asarray(d, dtype=np.float64)
            if arr.ndim == 2:
                arr = arr[None]
            stacks.append(arr)
    if not stacks or sum(len(s) for s in stacks) == 0:
        raise ValueError("no samples supplied for topology fitting")
    mean_lm = np.concatenate(stacks, axis=0).mean(axis=0)
    return delaunay_triangulate(mean_lm)


def feature_descriptors(topology: Triangulation, n_points: int = N_LANDMARKS) -> list[FeatureDescriptor]:
    """Descriptor list aligned index-for-index with extract_feature_vector output."""
    descs: list[FeatureDescriptor] = []
    for i in range(n_points):
        for j in range(i + 1, n_points):
            descs.append(FeatureDescriptor("distance", (i, j)))
    for i, j, k in topology.triangles:
        descs.append(FeatureDescriptor("area", (i, j, k)))
        descs.append(FeatureDescriptor("angle", (i, j, k), vertex=i))
        descs.append(FeatureDescriptor("angle", (i, j, k), vertex=j))
        descs.append(FeatureDescriptor("angle", (i, j, k), vertex=k))
    return descs


def extract_feature_vector(landmarks, topology: Triangulation) -> np.ndarray:
    """Full predictor vector: distances then triangle features; length 2278 + 4T."""
    return np.concatenate([pairwise_distances(landmarks), triangle_features(landmarks, topology)])


class LandmarkFeatureExtractor(BaseEstimator, TransformerMixin):
    """Landmark sets -> geometric feature matrix, with a shared fitted topology.

    fit learns the Delaunay topology of the mean training landmarks;
    transform evaluates each sample's own coordinates on the frozen triangle
    set, so columns are comparable across samples.
    """

    def __init__(self, topology: Triangulation | None = None):
        self.topology = topology

    def fit(self, X, y=None):
        X = self._as_stack(X)
        if self.topology is not None:
            self.topology_ = self.topology
        else:
            self.topology_ = fit_reference_topology(X)
        self.descriptors_ = feature_descriptors(self.topology_, n_points=X.shape[1])
        self.n_features_out_ = len(self.descriptors_)
        return self

    def transform(self, X) -> np.ndarray:
        X = self._as_stack(X)
        out = np.empty((X.shape[0], self.n_features_out_), dtype=np.float64)
        for idx in range(X.shape[0]):
            out[idx] = extract_feature_vector(X[idx], self.topology_)
        return out

    @staticmethod
    def _as_stack(X) -> np.ndarray:
        if hasattr(X, "samples"):
            X = [s.landmarks for s in X.samples]
        arr = np.asarray(X, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[None]
        if arr.ndim != 3 or arr.shape[2] != 2:
            raise ValueError(f"expected landmarks of shape (n_samples, n_points, 2), got {arr.shape}")
        return arr
