"""Persisted feature matrices.

A feature matrix on disk is two files sharing a stem:

  <stem>.json  header: {"p": P, "n": N, "dtype": "f32le", "descriptors": [...]}
  <stem>.bin   row-major little-endian float32 blob, rows = features,
               columns = samples (P x N)

Descriptors are optional; when present they carry one JSON object per
feature row (see ``faceadapt.landmarks.features``).
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

__all__ = ["save_feature_matrix", "load_feature_matrix"]


def _paths(stem: str | os.PathLike) -> tuple[Path, Path]:
    stem = Path(stem)
    if stem.suffix in {".json", ".bin"}:
        stem = stem.with_suffix("")
    return stem.with_suffix(".json"), stem.with_suffix(".bin")


def save_feature_matrix(stem: str | os.PathLike, matrix: np.ndarray, descriptors: list[dict] | None = None) -> None:
    """Save a (P, N) feature-by-sample matrix under ``stem``.json/.bin."""
    arr = np.ascontiguousarray(np.asarray(matrix, dtype=np.float32))
    if arr.ndim != 2:
        raise ValueError(f"feature matrix must be 2-D (features, samples), got {arr.shape}")
    header_path, blob_path = _paths(stem)
    header = {"p": int(arr.shape[0]), "n": int(arr.shape[1]), "dtype": "f32le"}
    if descriptors is not None:
        if len(descriptors) != arr.shape[0]:
            raise ValueError("descriptor count does not match feature count")
        header["descriptors"] = descriptors
    with open(header_path, "w", encoding="utf-8") as fh:
        json.dump(header, fh)
    arr.astype("<f4").tofile(blob_path)


def load_feature_matrix(stem: str | os.PathLike) -> tuple[np.ndarray, list[dict] | None]:
    """Load a feature matrix; returns ((P, N) float32 array, descriptors or None)."""
    header_path, blob_path = _paths(stem)
    with open(header_path, encoding="utf-8") as fh:
        header = json.load(fh)
    if header.get("dtype") != "f32le":
        raise ValueError(f"{header_path}: unsupported dtype {header.get('dtype')!r}")
    p, n = int(header["p"]), int(header["n"])
    blob = np.fromfile(blob_path, dtype="<f4")
    if blob.size != p * n:
        raise ValueError(f"{blob_path}: expected {p * n} values, found {blob.size}")
    return blob.reshape(p, n), header.get("descriptors")
