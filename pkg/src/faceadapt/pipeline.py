"""End-to-end pipeline: ingest -> features -> screening -> training -> metrics.

The nested cross-validation harness follows a subject-disjoint 5x2 design:
an outer 5-fold split per domain (paired by fold index), and an inner 2-fold
split of each outer training set that picks the alignment-loss weight xi by
mean pooled macro F1 over the two validation folds. Topology fitting and the
Beta-mixture screen only ever see outer-training samples; the held-out fold
influences nothing but the final evaluation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adapt import DomainData, TrainConfig, train
from .align import align_face
from .betamix import BetaMixSelector
from .crossval import EvalReport, FoldResult, subject_disjoint_folds
from .io.manifest import load_manifest
from .io.matrix import load_feature_matrix
from .landmarks import LandmarkFeatureExtractor
from .metrics import confusion, f1_overall, per_class_f1, roc_auc_ovr
from .models import Network, NetworkSpec, build_network
from .rng import derive_seed, make_rng

__all__ = [
    "PipelineConfig",
    "LoadedData",
    "FoldFeatures",
    "load_pipeline_data",
    "prepare_fold_features",
    "rebuild_fold_features",
    "nested_cv",
    "evaluate_model",
    "metric_block",
]

DEFAULT_XI_GRID = (0.01, 0.3, 0.8)


@dataclass(frozen=True)
class PipelineConfig:
    manifest: str
    features: str | None = None  # feature-matrix stem for tabular tasks
    seed: int = 0
    align_size: int = 0  # warp images/landmarks to this size first (0 = off)
    betamix: dict = field(default_factory=lambda: {"enabled": True, "tau": 0.05, "max_iter": 1000, "tol": 1e-6})
    model: dict = field(default_factory=lambda: {"kind": "mlp", "hidden": 64})
    train: dict = field(default_factory=lambda: {"mode": "adapt", "epochs": 5, "batch_size": 32})
    cv: dict = field(default_factory=lambda: {"outer_folds": 5, "inner_folds": 2, "xi_grid": list(DEFAULT_XI_GRID)})

    def to_json(self) -> dict:
        return {
            "manifest": self.manifest,
            "features": self.features,
            "seed": self.seed,
            "align_size": self.align_size,
            "betamix": dict(self.betamix),
            "model": dict(self.model),
            "train": dict(self.train),
            "cv": dict(self.cv),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PipelineConfig":
        merged = {}
        for name in ("betamix", "model", "train", "cv"):
            default = cls.__dataclass_fields__[name].default_factory()
            default.update(obj.get(name, {}))
            merged[name] = default
        return cls(
            manifest=obj["manifest"],
            features=obj.get("features"),
            seed=int(obj.get("seed", 0)),
            align_size=int(obj.get("align_size", 0)),
            **merged,
        )

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        path = Path(path)
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        # resolve data paths relative to the config file
        for key in ("manifest", "features"):
            if obj.get(key):
                obj[key] = str((path.parent / obj[key]).resolve()) if not Path(obj[key]).is_absolute() else obj[key]
        return cls.from_json(obj)


@dataclass
class LoadedData:
    sample_ids: list
    subjects: np.ndarray  # (N,) str
    domains: np.ndarray  # (N,) "source"/"target"
    labels: np.ndarray  # (N,) int
    n_classes: int
    images: np.ndarray | None  # (N, 1, S, S) float32
    landmarks: np.ndarray | None  # (N, 68, 2) float64
    features: np.ndarray | None  # (N, P) float32, from a feature-matrix file

    def __len__(self) -> int:
        return len(self.labels)

    def domain_mask(self, domain: str) -> np.ndarray:
        return self.domains == domain


def load_pipeline_data(config: PipelineConfig) -> LoadedData:
    dataset = load_manifest(config.manifest)
    n = len(dataset)
    labels = dataset.labels()
    subjects = np.array(dataset.subject_ids())
    domains = np.array([s.domain for s in dataset.samples])
    sample_ids = [s.sample_id for s in dataset.samples]

    images = None
    landmarks = None
    has_images = all(s.image is not None for s in dataset.samples)
    has_landmarks = all(s.landmarks is not None for s in dataset.samples)
    if has_images and has_landmarks and config.align_size:
        aligned = [align_face(s.image, s.landmarks, config.align_size) for s in dataset.samples]
        images = np.stack([a[0] for a in aligned])[:, None, :, :].astype(np.float32)
        landmarks = np.stack([a[1] for a in aligned])
    else:
        if has_images:
            shapes = {s.image.shape for s in dataset.samples}
            if len(shapes) != 1:
                raise ValueError(f"images have mixed shapes {shapes}; set align_size to normalize")
            images = np.stack([s.image for s in dataset.samples])[:, None, :, :].astype(np.float32)
        if has_landmarks:
            landmarks = np.stack([s.landmarks for s in dataset.samples])

    features = None
    if config.features:
        matrix, _ = load_feature_matrix(config.features)
        if matrix.shape[1] != n:
            raise ValueError(f"feature matrix has {matrix.shape[1]} columns, manifest has {n} rows")
        features = matrix.T.astype(np.float32)

    return LoadedData(
        sample_ids=sample_ids,
        subjects=subjects,
        domains=domains,
        labels=labels,
        n_classes=dataset.n_classes,
        images=images,
        landmarks=landmarks,
        features=features,
    )


@dataclass
class FoldFeatures:
    """Per-fold model inputs: feature columns fitted on training rows only."""

    features: np.ndarray | None  # (N, P_sel) for all samples
    n_selected: int | None
    topology: object | None = None  # Triangulation when features came from landmarks
    selected_indices: np.ndarray | None = None  # columns kept by the screen


def prepare_fold_features(data: LoadedData, train_mask: np.ndarray, config: PipelineConfig, lineage=None, fold: int = -1) -> FoldFeatures:
    kind = config.model.get("kind", "mlp")
    needs_features = kind in ("mlp", "fusion")
    if not needs_features:
        return FoldFeatures(features=None, n_selected=None)

    topology = None
    if data.features is not None:
        feats_all = data.features.astype(np.float64)
    elif data.landmarks is not None:
        if lineage:
            lineage("topology", fold, [data.sample_ids[i] for i in np.nonzero(train_mask)[0]])
        extractor = LandmarkFeatureExtractor().fit(data.landmarks[train_mask])
        feats_all = extractor.transform(data.landmarks)
        topology = extractor.topology_
    else:
        raise ValueError("model needs features but the data has neither a feature file nor landmarks")

    n_selected = feats_all.shape[1]
    selected_indices = None
    if config.betamix.get("enabled", True):
        if lineage:
            lineage("betamix", fold, [data.sample_ids[i] for i in np.nonzero(train_mask)[0]])
        selector = BetaMixSelector(
            tau=config.betamix.get("tau", 0.05),
            max_iter=config.betamix.get("max_iter", 1000),
            tol=config.betamix.get("tol", 1e-6),
        )
        factors = np.column_stack(
            [
                data.labels[train_mask],
                (data.domains[train_mask] == "target").astype(np.int64),
                np.unique(data.subjects[train_mask], return_inverse=True)[1],
            ]
        )
        selector.fit(feats_all[train_mask], factors)
        if len(selector.selected_indices_) == 0:
            raise ValueError("no selected features: empty expression-only set")
        selected_indices = selector.selected_indices_
        feats_all = feats_all[:, selected_indices]
        n_selected = len(selected_indices)
    return FoldFeatures(
        features=feats_all.astype(np.float32),
        n_selected=n_selected,
        topology=topology,
        selected_indices=selected_indices,
    )


def rebuild_fold_features(data: LoadedData, topology, selected_indices) -> FoldFeatures:
    """Recreate model inputs from a saved topology + column selection."""
    if data.features is not None:
        feats_all = data.features.astype(np.float64)
    elif data.landmarks is not None:
        if topology is None:
            raise ValueError("landmark data needs the saved topology to rebuild features")
        feats_all = LandmarkFeatureExtractor(topology=topology).fit(data.landmarks[:1]).transform(data.landmarks)
    else:
        return FoldFeatures(features=None, n_selected=None)
    idx = None
    if selected_indices is not None:
        idx = np.asarray(selected_indices, dtype=np.int64)
        feats_all = feats_all[:, idx]
    return FoldFeatures(
        features=feats_all.astype(np.float32),
        n_selected=feats_all.shape[1],
        topology=topology,
        selected_indices=idx,
    )


def _domain_bundle(data: LoadedData, fold_feats: FoldFeatures, mask: np.ndarray, kind: str) -> DomainData | None:
    if not mask.any():
        return None
    return DomainData(
        labels=data.labels[mask],
        images=data.images[mask] if kind in ("cnn", "fusion") else None,
        features=fold_feats.features[mask] if kind in ("mlp", "fusion") else None,
    )


def _network_spec(config: PipelineConfig, data: LoadedData, fold_feats: FoldFeatures) -> NetworkSpec:
    kind = config.model.get("kind", "mlp")
    return NetworkSpec(
        kind=kind,
        n_classes=data.n_classes,
        input_feature_dim=None if fold_feats.features is None else fold_feats.features.shape[1],
        input_image_size=None if kind == "mlp" else data.images.shape[-1],
        conv_channels=tuple(config.model.get("conv_channels", (8, 16, 32))),
        hidden=int(config.model.get("hidden", 512)),
        dropout_p=float(config.model.get("dropout_p", 0.5)),
    )


def _train_config(config: PipelineConfig, xi: float | None, seed: int) -> TrainConfig:
    fields = dict(config.train)
    if xi is not None:
        fields["xi"] = xi
    fields["seed"] = seed
    return TrainConfig.from_json(fields)


def _fit_model(config: PipelineConfig, data: LoadedData, fold_feats: FoldFeatures, train_mask, xi, seed_labels) -> Network:
    kind = config.model.get("kind", "mlp")
    spec = _network_spec(config, data, fold_feats)
    seed = derive_seed(config.seed, *seed_labels)
    model = build_network(spec, make_rng(seed, "init"))
    src = _domain_bundle(data, fold_feats, train_mask & data.domain_mask("source"), kind)
    tgt = _domain_bundle(data, fold_feats, train_mask & data.domain_mask("target"), kind)
    train(_train_config(config, xi, seed), model, source=src, target=tgt)
    return model


def metric_block(probs: np.ndarray, labels: np.ndarray, n_classes: int) -> dict:
    preds = np.argmax(probs, axis=1)
    aucs, macro_auc, excluded = roc_auc_ovr(probs, labels)
    return {
        "macro_f1": f1_overall(preds, labels, n_classes),
        "per_class_f1": per_class_f1(preds, labels, n_classes).tolist(),
        "macro_auc": macro_auc,
        "per_class_auc": [None if np.isnan(a) else float(a) for a in aucs],
        "auc_excluded_classes": excluded,
        "confusion": confusion(preds, labels, n_classes).tolist(),
    }


def evaluate_model(model: Network, data: LoadedData, fold_feats: FoldFeatures, mask: np.ndarray) -> dict:
    """Pooled plus per-domain metrics over the masked samples."""
    kind = model.spec.kind
    bundle = _domain_bundle(data, fold_feats, mask, kind)
    probs_parts = []
    batch = 256
    for start in range(0, len(bundle), batch):
        idx = np.arange(start, min(start + batch, len(bundle)))
        probs_parts.append(model.predict_proba(bundle.inputs(idx)))
    probs = np.vstack(probs_parts)
    labels = data.labels[mask]
    domains = data.domains[mask]
    out = {"pooled": metric_block(probs, labels, data.n_classes)}
    for dom in ("source", "target"):
        sel = domains == dom
        if sel.any():
            out[dom] = metric_block(probs[sel], labels[sel], data.n_classes)
    return out


def nested_cv(config: PipelineConfig, data: LoadedData, lineage=None) -> EvalReport:
    """Outer k-fold, inner 2-fold xi selection, subject-disjoint throughout.

    ``lineage``, when given, is called as lineage(stage, fold, sample_ids)
    for stages "topology", "betamix", "xi_selection", and "train".
    """
    outer_k = int(config.cv.get("outer_folds", 5))
    inner_k = int(config.cv.get("inner_folds", 2))
    xi_grid = list(config.cv.get("xi_grid", DEFAULT_XI_GRID))
    mode = config.train.get("mode", "adapt")

    plans = {}
    for dom in ("source", "target"):
        mask = data.domain_mask(dom)
        if mask.any():
            plans[dom] = subject_disjoint_folds(data.subjects[mask].tolist(), outer_k, derive_seed(config.seed, "outer", dom))

    def fold_mask(fold: int) -> np.ndarray:
        mask = np.zeros(len(data), dtype=bool)
        for dom, plan in plans.items():
            dmask = data.domain_mask(dom)
            mask |= dmask & np.array([s in plan.subjects_in(fold) for s in data.subjects])
        return mask

    report = EvalReport()
    for fold in range(outer_k):
        test_mask = fold_mask(fold)
        train_mask = ~test_mask
        fold_feats = prepare_fold_features(data, train_mask, config, lineage=lineage, fold=fold)

        selected_xi = config.train.get("xi")
        if mode == "adapt":
            selected_xi = xi_grid[0] if selected_xi is None else selected_xi
            if len(xi_grid) > 1:
                selected_xi = _select_xi(config, data, fold_feats, train_mask, xi_grid, inner_k, fold, lineage)

        if lineage:
            lineage("train", fold, [data.sample_ids[i] for i in np.nonzero(train_mask)[0]])
        model = _fit_model(config, data, fold_feats, train_mask, selected_xi if mode == "adapt" else None, ("outer", fold))
        metrics = evaluate_model(model, data, fold_feats, test_mask)
        report.folds.append(
            FoldResult(
                fold=fold,
                selected_xi=float(selected_xi) if (mode == "adapt" and selected_xi is not None) else None,
                n_selected_features=fold_feats.n_selected,
                metrics=metrics,
            )
        )
    report.finalize()
    return report


def _select_xi(config, data, fold_feats, outer_train_mask, xi_grid, inner_k, fold, lineage) -> float:
    inner_plans = {}
    for dom in ("source", "target"):
        mask = outer_train_mask & data.domain_mask(dom)
        if mask.any():
            inner_plans[dom] = subject_disjoint_folds(
                data.subjects[mask].tolist(), inner_k, derive_seed(config.seed, "inner", fold, dom)
            )

    def inner_val_mask(j: int) -> np.ndarray:
        mask = np.zeros(len(data), dtype=bool)
        for dom, plan in inner_plans.items():
            dmask = outer_train_mask & data.domain_mask(dom)
            mask |= dmask & np.array([s in plan.subjects_in(j) for s in data.subjects])
        return mask

    if lineage:
        lineage("xi_selection", fold, [data.sample_ids[i] for i in np.nonzero(outer_train_mask)[0]])
    scores = []
    for xi in xi_grid:
        fold_scores = []
        for j in range(inner_k):
            val_mask = inner_val_mask(j)
            inner_train = outer_train_mask & ~val_mask
            model = _fit_model(config, data, fold_feats, inner_train, xi, ("inner", fold, j, xi))
            metrics = evaluate_model(model, data, fold_feats, val_mask)
            fold_scores.append(metrics["pooled"]["macro_f1"])
        scores.append(float(np.mean(fold_scores)))
    best = int(np.argmax(scores))  # ties resolve to the earliest grid entry
    return float(xi_grid[best])
