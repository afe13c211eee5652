"""Dataset manifests.

A manifest is a UTF-8 CSV with the exact header

    sample_id,subject_id,domain,label,image,landmarks

where ``domain`` is ``source`` or ``target``, ``image`` is a relative path to
a binary PGM (P5), and ``landmarks`` is a relative path to a text file of 68
"x y" lines. For tabular tasks (features supplied through a separate feature
matrix file) the ``image`` and ``landmarks`` cells may be left empty, in
which case those modalities are absent from the sample.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..validation import N_LANDMARKS, as_landmarks
from .pgm import read_pgm

MANIFEST_HEADER = ["sample_id", "subject_id", "domain", "label", "image", "landmarks"]
DOMAINS = ("source", "target")

__all__ = ["ManifestError", "Sample", "Dataset", "load_manifest", "write_manifest"]


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class Sample:
    """One labelled face sample; image/landmarks may be absent for tabular data."""

    sample_id: str
    subject_id: str
    domain: str  # "source" | "target"
    label: int
    image: np.ndarray | None = None  # (H, W) float32 in [0, 1]
    landmarks: np.ndarray | None = None  # (68, 2) float64


@dataclass(frozen=True)
class Dataset:
    samples: tuple[Sample, ...]
    n_classes: int
    class_counts: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not self.class_counts:
            counts = [0] * self.n_classes
            for s in self.samples:
                counts[s.label] += 1
            object.__setattr__(self, "class_counts", tuple(counts))
        if sum(self.class_counts) != len(self.samples):
            raise ValueError("class_counts does not sum to the number of samples")

    def __len__(self) -> int:
        return len(self.samples)

    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.samples], dtype=np.int64)

    def subject_ids(self) -> list[str]:
        return [s.subject_id for s in self.samples]

    def by_domain(self, domain: str) -> "Dataset":
        subset = tuple(s for s in self.samples if s.domain == domain)
        return Dataset(samples=subset, n_classes=self.n_classes)

    def subset(self, indices) -> "Dataset":
        subset = tuple(self.samples[i] for i in indices)
        return Dataset(samples=subset, n_classes=self.n_classes)


def _load_landmark_file(path: Path, row_num: int) -> np.ndarray:
    try:
        raw = path.read_text().split()
    except OSError as exc:
        raise ManifestError(f"row {row_num}: cannot read landmark file {path}: {exc}") from exc
    values = []
    for tok in raw:
        try:
            values.append(float(tok))
        except ValueError as exc:
            raise ManifestError(f"row {row_num}: bad landmark value {tok!r} in {path}") from exc
    if len(values) != 2 * N_LANDMARKS:
        raise ManifestError(
            f"row {row_num}: landmark file {path} has {len(values) // 2} points, expected {N_LANDMARKS}"
        )
    try:
        return as_landmarks(np.array(values).reshape(N_LANDMARKS, 2))
    except ValueError as exc:
        raise ManifestError(f"row {row_num}: {exc}") from exc


def load_manifest(path: str | os.PathLike) -> Dataset:
    """Load a manifest CSV and resolve image/landmark files relative to it."""
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"manifest not found: {path}")
    base = path.parent
    samples: list[Sample] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ManifestError(f"{path}: empty manifest") from None
        if header != MANIFEST_HEADER:
            raise ManifestError(f"{path}: bad header {header!r}, expected {MANIFEST_HEADER!r}")
        for row_num, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(MANIFEST_HEADER):
                raise ManifestError(f"row {row_num}: expected {len(MANIFEST_HEADER)} fields, got {len(row)}")
            sample_id, subject_id, domain, label_str, image_rel, lm_rel = row
            if domain not in DOMAINS:
                raise ManifestError(f"row {row_num}: domain {domain!r} not in {DOMAINS}")
            try:
                label = int(label_str)
            except ValueError as exc:
                raise ManifestError(f"row {row_num}: bad label {label_str!r}") from exc
            if label < 0:
                raise ManifestError(f"row {row_num}: negative label {label}")
            image = None
            if image_rel:
                image_path = base / image_rel
                if not image_path.exists():
                    raise ManifestError(f"row {row_num}: image file not found: {image_path}")
                image = read_pgm(image_path)
            landmarks = None
            if lm_rel:
                lm_path = base / lm_rel
                if not lm_path.exists():
                    raise ManifestError(f"row {row_num}: landmark file not found: {lm_path}")
                landmarks = _load_landmark_file(lm_path, row_num)
            samples.append(Sample(sample_id, subject_id, domain, label, image, landmarks))
    if not samples:
        raise ManifestError(f"{path}: manifest has no data rows")
    n_classes = 1 + max(s.label for s in samples)
    return Dataset(samples=tuple(samples), n_classes=n_classes)


def write_manifest(path: str | os.PathLike, rows: list[dict]) -> None:
    """Write manifest rows (dicts keyed by the manifest header) to CSV."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=MANIFEST_HEADER)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
