"""Synthetic data generators.

Three presets stand in for the access-restricted face datasets:

  planted_correlations  tabular features with known expression-only,
                        domain-only, and overlapping correlated subsets
  two_domain_gaussians  K-class Gaussian classification with a constant
                        covariate shift between source and target inputs
                        (class-conditional structure shared across domains)
  two_domain_faces      stylized 68-landmark faces plus rendered blob
                        images; class geometry lives in the landmarks and
                        class texture in the images, so the modalities carry
                        complementary signal

Every preset writes a manifest; the tabular presets also write a feature
matrix (their manifest rows have empty image/landmark paths) and a
truth.json recording the planted structure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .io.manifest import write_manifest
from .io.matrix import save_feature_matrix
from .io.pgm import write_pgm
from .rng import make_rng

PRESETS = ("planted_correlations", "two_domain_gaussians", "two_domain_faces")

__all__ = ["SynthSpec", "synth_generate", "face_template"]


@dataclass(frozen=True)
class SynthSpec:
    preset: str
    n_per_domain: int = 120
    n_subjects: int = 24  # per domain
    n_classes: int = 0  # 0 = preset default
    n_features: int = 500  # planted_correlations / two_domain_gaussians
    n_expression_only: int = 20
    n_domain_only: int = 10
    n_overlap: int = 5
    class_separation: float = 4.0  # two_domain_gaussians
    shift: float = 1.0  # domain shift magnitude
    noise: float = 1.0
    image_size: int = 32  # two_domain_faces
    seed: int = 0

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}; choose from {PRESETS}")

    @property
    def k(self) -> int:
        if self.n_classes:
            return self.n_classes
        return {"planted_correlations": 3, "two_domain_gaussians": 3, "two_domain_faces": 4}[self.preset]


def synth_generate(spec: SynthSpec, out_dir) -> dict:
    """Generate the preset under out_dir; returns paths and planted truth."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if spec.preset == "planted_correlations":
        return _gen_planted(spec, out)
    if spec.preset == "two_domain_gaussians":
        return _gen_gaussians(spec, out)
    return _gen_faces(spec, out)


def _subject_pool(spec: SynthSpec, domain: str) -> list:
    return [f"{domain[0]}{i:03d}" for i in range(spec.n_subjects)]


def _assign_subjects(spec: SynthSpec, domain: str, rng) -> list:
    pool = _subject_pool(spec, domain)
    # every subject appears; remaining samples drawn uniformly
    picks = list(range(len(pool))) + list(rng.integers(0, len(pool), size=max(0, spec.n_per_domain - len(pool))))
    rng.shuffle(picks)
    return [pool[i] for i in picks[: spec.n_per_domain]]


def _tabular_manifest_rows(sample_ids, subjects, domains, labels) -> list:
    return [
        {"sample_id": sid, "subject_id": sub, "domain": dom, "label": int(lab), "image": "", "landmarks": ""}
        for sid, sub, dom, lab in zip(sample_ids, subjects, domains, labels)
    ]


def _measure_abs_corr(column: np.ndarray, against: np.ndarray) -> float:
    c = column - column.mean()
    a = against - against.mean()
    denom = np.linalg.norm(c) * np.linalg.norm(a)
    return float(abs(c @ a) / denom) if denom > 0 else 0.0


def _gen_planted(spec: SynthSpec, out: Path) -> dict:
    rng = make_rng(spec.seed, "planted")
    n = 2 * spec.n_per_domain
    k = spec.k
    labels = rng.integers(0, k, size=n)
    domains = np.array(["source"] * spec.n_per_domain + ["target"] * spec.n_per_domain)
    subjects = _assign_subjects(spec, "source", rng) + _assign_subjects(spec, "target", rng)

    X = rng.normal(size=(n, spec.n_features))
    e = (labels - labels.mean()) / labels.std()
    d = (domains == "target").astype(np.float64)
    d = (d - d.mean()) / d.std()

    idx = iter(range(spec.n_features))
    expr_only = [next(idx) for _ in range(spec.n_expression_only)]
    domain_only = [next(idx) for _ in range(spec.n_domain_only)]
    overlap = [next(idx) for _ in range(spec.n_overlap)]
    for f in expr_only:
        X[:, f] = e + 0.8 * rng.normal(size=n)
    for f in domain_only:
        X[:, f] = d + 0.8 * rng.normal(size=n)
    for f in overlap:
        X[:, f] = e + d + 0.8 * rng.normal(size=n)

    # construction check: planted correlations really are strong
    for f in expr_only:
        assert _measure_abs_corr(X[:, f], e) >= 0.5, "planted expression correlation too weak"
    for f in domain_only:
        assert _measure_abs_corr(X[:, f], d) >= 0.5, "planted domain correlation too weak"

    sample_ids = [f"pl{i:05d}" for i in range(n)]
    write_manifest(out / "manifest.csv", _tabular_manifest_rows(sample_ids, subjects, domains, labels))
    save_feature_matrix(out / "features", X.T)
    truth = {
        "preset": spec.preset,
        "expression_only": expr_only,
        "domain_only": domain_only,
        "overlap": overlap,
    }
    with open(out / "truth.json", "w", encoding="utf-8") as fh:
        json.dump(truth, fh, indent=1)
    return {"manifest": str(out / "manifest.csv"), "features": str(out / "features"), "truth": truth}


def _gen_gaussians(spec: SynthSpec, out: Path) -> dict:
    rng = make_rng(spec.seed, "gaussians")
    k = spec.k
    dim = min(spec.n_features, 16) if spec.n_features else 10
    means = rng.normal(size=(k, dim)) * spec.class_separation
    shift_vec = spec.shift * (means[1 % k] - means[0])

    per = spec.n_per_domain
    labels = np.concatenate([np.tile(np.arange(k), per // k + 1)[:per] for _ in range(2)])
    domains = np.array(["source"] * per + ["target"] * per)
    subjects = _assign_subjects(spec, "source", rng) + _assign_subjects(spec, "target", rng)
    subject_offsets = {s: rng.normal(size=dim) * 0.2 * spec.noise for s in set(subjects)}

    X = np.empty((2 * per, dim))
    for i in range(2 * per):
        base = means[labels[i]] + (shift_vec if domains[i] == "target" else 0.0)
        X[i] = base + subject_offsets[subjects[i]] + rng.normal(size=dim) * spec.noise

    sample_ids = [f"gs{i:05d}" for i in range(2 * per)]
    write_manifest(out / "manifest.csv", _tabular_manifest_rows(sample_ids, subjects, domains, labels))
    save_feature_matrix(out / "features", X.T)
    truth = {"preset": spec.preset, "dim": dim, "shift": spec.shift}
    with open(out / "truth.json", "w", encoding="utf-8") as fh:
        json.dump(truth, fh, indent=1)
    return {"manifest": str(out / "manifest.csv"), "features": str(out / "features"), "truth": truth}


# --- stylized faces ---------------------------------------------------------


def face_template() -> np.ndarray:
    """68 landmarks of a neutral face in a 100x100 box (standard ordering)."""
    pts = np.zeros((68, 2))
    theta = np.deg2rad(np.linspace(180, 360, 17))
    pts[0:17, 0] = 50 + 38 * np.cos(theta)  # jaw, ear to ear through the chin
    pts[0:17, 1] = 45 - 47 * np.sin(theta)
    for side, start in ((-1, 17), (1, 22)):  # brows
        xs = 50 + side * np.linspace(7, 25, 5)
        arc = np.array([0.0, -1.2, -2.0, -1.2, 0.0])
        pts[start : start + 5, 0] = xs
        pts[start : start + 5, 1] = 33 + arc
    pts[27:31] = np.column_stack([np.full(4, 50.0), np.linspace(40, 56, 4)])  # nose bridge
    pts[31:36, 0] = np.linspace(44, 56, 5)  # nose base
    pts[31:36, 1] = [61, 62.5, 63, 62.5, 61]
    eye = np.array([[-6, 0], [-3, -2], [3, -2], [6, 0], [3, 2], [-3, 2]], dtype=np.float64)
    pts[36:42] = eye + [33, 42]  # image-left eye
    pts[42:48] = eye + [67, 42]  # image-right eye
    ang = np.deg2rad(np.linspace(180, -150, 12))
    pts[48:60, 0] = 50 + 12 * np.cos(ang)  # outer lip
    pts[48:60, 1] = 74 - 5 * np.sin(ang)
    ang_in = np.deg2rad(np.linspace(180, -135, 8))
    pts[60:68, 0] = 50 + 7 * np.cos(ang_in)  # inner lip
    pts[60:68, 1] = 74 - 2.5 * np.sin(ang_in)
    return pts


_MOUTH = slice(48, 68)
_BROWS = slice(17, 27)
_JAW = slice(0, 17)
_EYES = slice(36, 48)


def _deform_expression(pts: np.ndarray, geo: int, strength: float = 1.0) -> np.ndarray:
    """Geometry code 0 keeps the neutral face; code 1 widens/raises the mouth
    and lifts the brows (the landmark-visible half of the class label)."""
    out = pts.copy()
    if geo == 1:
        mouth = out[_MOUTH]
        center = mouth.mean(axis=0)
        out[_MOUTH, 0] = center[0] + (mouth[:, 0] - center[0]) * (1.0 + 0.35 * strength)
        out[_MOUTH, 1] -= 2.5 * strength
        out[_BROWS, 1] -= 3.0 * strength
    return out


def _deform_domain(pts: np.ndarray) -> np.ndarray:
    """Child-like target geometry: rounder jaw, larger eyes."""
    out = pts.copy()
    jaw = out[_JAW]
    out[_JAW, 1] = 45 + (jaw[:, 1] - 45) * 0.85
    out[_JAW, 0] = 50 + (jaw[:, 0] - 50) * 1.06
    for sl in (slice(36, 42), slice(42, 48)):
        eye = out[sl]
        out[sl] = eye.mean(axis=0) + (eye - eye.mean(axis=0)) * 1.25
    return out


def _render_face_image(size: int, tex: int, domain: str, rng) -> np.ndarray:
    """Blob image whose intensity pattern encodes the texture code only."""
    scale = size / 100.0
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)

    def blob(cx, cy, sigma, amp):
        return amp * np.exp(-(((xx - cx * scale) ** 2) + (yy - cy * scale) ** 2) / (2 * (sigma * scale) ** 2))

    img = np.zeros((size, size))
    face = (((xx - 50 * scale) / (40 * scale)) ** 2 + ((yy - 48 * scale) / (46 * scale)) ** 2) <= 1.0
    img[face] = 0.28
    mouth_amp, brow_amp = (0.65, 0.15) if tex == 0 else (0.15, 0.65)
    img += blob(50, 74, 9, mouth_amp)
    img += blob(50, 30, 11, brow_amp)
    img += blob(33, 42, 4, 0.3) + blob(67, 42, 4, 0.3)
    if domain == "target":
        img += 0.06
    img += rng.normal(size=img.shape) * 0.03
    return np.clip(img, 0.0, 1.0)


def _gen_faces(spec: SynthSpec, out: Path) -> dict:
    rng = make_rng(spec.seed, "faces")
    k = spec.k
    if k < 2:
        raise ValueError("two_domain_faces needs at least 2 classes")
    n_geo = 2
    (out / "images").mkdir(exist_ok=True)
    (out / "landmarks").mkdir(exist_ok=True)
    base = face_template()
    rows = []
    per = spec.n_per_domain
    labels = np.tile(np.arange(k), per // k + 1)[:per]
    truth_classes = {int(c): {"geometry": int(c % n_geo), "texture": int(c // n_geo)} for c in range(k)}
    for domain in ("source", "target"):
        subjects = _assign_subjects(spec, domain, rng)
        subject_offsets = {s: rng.normal(size=2) * 0.3 for s in set(subjects)}
        for i in range(per):
            label = int(labels[i])
            geo, tex = label % n_geo, (label // n_geo) % 2
            pts = _deform_expression(base, geo)
            if domain == "target":
                pts = _deform_domain(pts)
            pts = pts + subject_offsets[subjects[i]] + rng.normal(size=pts.shape) * 0.4 * spec.noise
            pts = pts * (spec.image_size / 100.0)
            img = _render_face_image(spec.image_size, tex, domain, rng)

            sid = f"{domain[0]}f{i:05d}"
            img_rel = f"images/{sid}.pgm"
            lm_rel = f"landmarks/{sid}.txt"
            write_pgm(out / img_rel, img)
            with open(out / lm_rel, "w", encoding="utf-8") as fh:
                for x, y in pts:
                    fh.write(f"{x!r} {y!r}\n")
            rows.append(
                {
                    "sample_id": sid,
                    "subject_id": subjects[i],
                    "domain": domain,
                    "label": label,
                    "image": img_rel,
                    "landmarks": lm_rel,
                }
            )
    write_manifest(out / "manifest.csv", rows)
    truth = {"preset": spec.preset, "classes": truth_classes}
    with open(out / "truth.json", "w", encoding="utf-8") as fh:
        json.dump(truth, fh, indent=1)
    return {"manifest": str(out / "manifest.csv"), "features": None, "truth": truth}
