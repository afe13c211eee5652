"""Loss assembly and the dual-stream shared-weight trainer.

In adapt mode each step draws one batch per domain, runs both through the
single shared network (the "two branches" are literally one parameter set),
and optimizes

    total = ce_source + ce_target + xi * alignment

where the alignment term pulls same-class cross-domain latent pairs together
and pushes different-class pairs apart up to the margin. Both alignment
terms are normalized by their own pair count so xi is batch-size
independent. The remaining modes (source_only, target_only, finetune,
finetune_mixed) are plain class-weighted cross-entropy on the designated
data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .models import Network, NetworkSpec, build_network, init_classifier
from .nn import AdamState, LrSchedule, Tensor, adam_step, add, scale, softmax_cross_entropy, triangular_lr
from .nn.tensor import result
from .rng import make_rng

__all__ = [
    "DomainData",
    "TrainConfig",
    "TrainHistory",
    "class_weights",
    "weighted_cross_entropy",
    "contrastive_alignment_loss",
    "total_loss",
    "pair_batches",
    "train",
    "DualStreamClassifier",
]

MODES = ("source_only", "target_only", "finetune", "finetune_mixed", "adapt")


@dataclass(frozen=True)
class DomainData:
    """Training arrays for one domain; images and/or features may be present."""

    labels: np.ndarray
    images: np.ndarray | None = None  # (N, 1, S, S) float32
    features: np.ndarray | None = None  # (N, P) float32

    def __post_init__(self):
        n = len(self.labels)
        if self.images is None and self.features is None:
            raise ValueError("DomainData needs images and/or features")
        if self.images is not None and self.images.shape[0] != n:
            raise ValueError("images/labels length mismatch")
        if self.features is not None and self.features.shape[0] != n:
            raise ValueError("features/labels length mismatch")

    def __len__(self) -> int:
        return len(self.labels)

    def inputs(self, idx=None) -> dict:
        idx = slice(None) if idx is None else idx
        out = {}
        if self.images is not None:
            out["image"] = self.images[idx]
        if self.features is not None:
            out["features"] = self.features[idx]
        return out

    def class_counts(self, n_classes: int) -> np.ndarray:
        return np.bincount(self.labels, minlength=n_classes)

    @staticmethod
    def concatenate(a: "DomainData", b: "DomainData") -> "DomainData":
        def cat(x, y):
            if (x is None) != (y is None):
                raise ValueError("cannot concatenate: modality present in one domain only")
            return None if x is None else np.concatenate([x, y])

        return DomainData(
            labels=np.concatenate([a.labels, b.labels]),
            images=cat(a.images, b.images),
            features=cat(a.features, b.features),
        )


def class_weights(labels, class_counts) -> np.ndarray:
    """Inverse-class-frequency sample weights, normalized to mean 1 over the batch."""
    labels = np.asarray(labels, dtype=np.int64)
    counts = np.asarray(class_counts, dtype=np.float64)
    if np.any(counts[labels] <= 0):
        bad = labels[counts[labels] <= 0][0]
        raise ValueError(f"label {bad} has zero class count")
    raw = 1.0 / counts[labels]
    return raw * (len(labels) / raw.sum())


def weighted_cross_entropy(logits: Tensor, labels, class_counts=None) -> Tensor:
    """Cross entropy with per-sample inverse-frequency weights (unit weights if None)."""
    w = None if class_counts is None else class_weights(labels, class_counts)
    return softmax_cross_entropy(logits, labels, sample_weights=w)


def contrastive_alignment_loss(z_s: Tensor, y_s, z_t: Tensor, y_t, margin: float = 1.0) -> Tensor:
    """Cross-domain contrastive alignment over all source x target pairs.

    Same-class pairs contribute 0.5 * squared distance; different-class pairs
    contribute 0.5 * max(0, margin - distance)^2. Each term is averaged over
    its own pair count (a missing term contributes 0).
    """
    if margin <= 0:
        raise ValueError("margin must be positive")
    y_s = np.asarray(y_s, dtype=np.int64)
    y_t = np.asarray(y_t, dtype=np.int64)
    if len(y_s) == 0 or len(y_t) == 0:
        raise ValueError("empty batch on one side of the alignment loss")
    if z_s.data.shape[1] != z_t.data.shape[1]:
        raise ValueError("latent widths differ between domains")

    diff = z_s.data[:, None, :] - z_t.data[None, :, :]  # (ns, nt, d)
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    dist = np.sqrt(np.maximum(d2, 0.0))
    same = y_s[:, None] == y_t[None, :]
    n_same = int(same.sum())
    n_diff = same.size - n_same

    hinge = np.maximum(0.0, margin - dist)
    loss = 0.0
    if n_same:
        loss += 0.5 * float(d2[same].sum()) / n_same
    if n_diff:
        loss += 0.5 * float((hinge[~same] ** 2).sum()) / n_diff

    def backward(g):
        coef = np.zeros_like(dist)
        if n_same:
            coef[same] = 1.0 / n_same
        if n_diff:
            active = (~same) & (dist < margin) & (dist > 0)
            coef[active] = -(hinge[active] / dist[active]) / n_diff
        coef = coef * g
        gs = np.einsum("ij,ijk->ik", coef, diff)
        z_s.accumulate(gs.astype(z_s.data.dtype, copy=False))
        z_t.accumulate(-np.einsum("ij,ijk->jk", coef, diff).astype(z_t.data.dtype, copy=False))

    return result(np.array(loss, dtype=z_s.data.dtype), (z_s, z_t), backward)


def total_loss(l_cs: Tensor, l_ct: Tensor, l_da: Tensor, xi: float) -> Tensor:
    """total = (ce_source + ce_target) + xi * alignment."""
    return add(add(l_cs, l_ct), scale(l_da, xi))


class _Cycler:
    """Serves shuffled sample indices, reshuffling and cycling when exhausted."""

    def __init__(self, n: int, rng: np.random.Generator):
        self.n = n
        self.rng = rng
        self.pool = rng.permutation(n)
        self.pos = 0

    def take(self, k: int) -> np.ndarray:
        out = np.empty(k, dtype=np.int64)
        filled = 0
        while filled < k:
            if self.pos == self.n:
                self.pool = self.rng.permutation(self.n)
                self.pos = 0
            grab = min(k - filled, self.n - self.pos)
            out[filled : filled + grab] = self.pool[self.pos : self.pos + grab]
            self.pos += grab
            filled += grab
        return out


def pair_batches(n_source: int, n_target: int, batch_size: int, rng: np.random.Generator):
    """One epoch of paired (source_idx, target_idx) batches of size batch_size.

    The longer domain makes a full shuffled pass; the shorter is reshuffled
    and cycled to keep batches full.
    """
    if n_source == 0 or n_target == 0:
        raise ValueError("both domains must be non-empty")
    steps = max(1, math.ceil(max(n_source, n_target) / batch_size))
    src = _Cycler(n_source, rng)
    tgt = _Cycler(n_target, rng)
    for _ in range(steps):
        yield src.take(batch_size), tgt.take(batch_size)


@dataclass(frozen=True)
class TrainConfig:
    mode: str = "adapt"
    xi: float = 0.3
    margin: float = 1.0
    batch_size: int = 32
    epochs: int = 10
    zeta_min: float = 1e-5
    zeta_max: float = 1e-3
    lr_step_size: int | None = None  # iterations per half-cycle; None = 4 epochs' worth
    seed: int = 0
    class_weighting: bool = True
    reset_classifier: bool = False  # finetune variant: reinitialize C before training

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown training mode {self.mode!r}")
        if self.mode == "adapt" and not 0.0 < self.xi < 1.0:
            raise ValueError("xi must lie strictly between 0 and 1")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "xi": self.xi,
            "margin": self.margin,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "zeta_min": self.zeta_min,
            "zeta_max": self.zeta_max,
            "lr_step_size": self.lr_step_size,
            "seed": self.seed,
            "class_weighting": self.class_weighting,
            "reset_classifier": self.reset_classifier,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TrainConfig":
        return cls(**{k: obj[k] for k in obj if k in cls.__dataclass_fields__})


@dataclass
class TrainHistory:
    """Per-iteration loss records plus per-epoch validation metrics."""

    records: list = field(default_factory=list)  # (iter, l_cs, l_ct, l_da, total, lr)
    val_metrics: list = field(default_factory=list)  # (epoch, macro_f1)

    def append(self, iteration, l_cs, l_ct, l_da, total, lr) -> None:
        for v in (l_cs, l_ct, l_da, total):
            if not math.isfinite(v):
                raise RuntimeError(f"non-finite training loss at iteration {iteration}")
        self.records.append((iteration, float(l_cs), float(l_ct), float(l_da), float(total), float(lr)))

    def totals(self) -> np.ndarray:
        return np.array([r[4] for r in self.records])

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("iter,l_cs,l_ct,l_da,total,lr\n")
            for rec in self.records:
                fh.write(",".join(repr(v) for v in rec) + "\n")

    @classmethod
    def from_csv(cls, path) -> "TrainHistory":
        hist = cls()
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip()
            if header != "iter,l_cs,l_ct,l_da,total,lr":
                raise ValueError(f"unexpected history header {header!r}")
            for line in fh:
                it, *vals = line.strip().split(",")
                hist.records.append((int(it), *(float(v) for v in vals)))
        return hist


def _schedule(config: TrainConfig, steps_per_epoch: int) -> LrSchedule:
    step = config.lr_step_size if config.lr_step_size else max(1, 4 * steps_per_epoch)
    return LrSchedule(config.zeta_min, config.zeta_max, step)


def _predict_in_batches(model: Network, data: DomainData, batch_size: int = 256) -> np.ndarray:
    probs = []
    for start in range(0, len(data), batch_size):
        idx = np.arange(start, min(start + batch_size, len(data)))
        probs.append(model.predict_proba(data.inputs(idx)))
    return np.vstack(probs)


def _validate(model: Network, val: DomainData | None, n_classes: int) -> float | None:
    if val is None:
        return None
    from .metrics import f1_overall

    preds = np.argmax(_predict_in_batches(model, val), axis=1)
    return f1_overall(preds, val.labels, n_classes)


def _train_supervised(config, model, data, val, history, loss_slot) -> None:
    n = len(data)
    n_classes = model.spec.n_classes
    counts = data.class_counts(n_classes) if config.class_weighting else None
    steps_per_epoch = max(1, math.ceil(n / config.batch_size))
    sched = _schedule(config, steps_per_epoch)
    rng_batch = make_rng(config.seed, "batches")
    rng_drop = make_rng(config.seed, "dropout")
    state = AdamState()
    iteration = 0
    for epoch in range(config.epochs):
        order = rng_batch.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            lr = triangular_lr(iteration, sched)
            logits = model.forward_logits(data.inputs(idx), training=True, rng=rng_drop)
            loss = weighted_cross_entropy(logits, data.labels[idx], counts)
            model.zero_grad()
            loss.backward()
            adam_step(model.parameters(), state, lr)
            val_loss = float(loss.data)
            cs, ct = (val_loss, 0.0) if loss_slot == "source" else (0.0, val_loss)
            history.append(iteration, cs, ct, 0.0, val_loss, lr)
            iteration += 1
        f1 = _validate(model, val, n_classes)
        if f1 is not None:
            history.val_metrics.append((epoch, f1))


def _train_adapt(config, model, source, target, val, history) -> None:
    n_classes = model.spec.n_classes
    counts_s = source.class_counts(n_classes) if config.class_weighting else None
    counts_t = target.class_counts(n_classes) if config.class_weighting else None
    steps_per_epoch = max(1, math.ceil(max(len(source), len(target)) / config.batch_size))
    sched = _schedule(config, steps_per_epoch)
    rng_batch = make_rng(config.seed, "batches")
    rng_drop = make_rng(config.seed, "dropout")
    state = AdamState()
    iteration = 0
    for epoch in range(config.epochs):
        for idx_s, idx_t in pair_batches(len(source), len(target), config.batch_size, rng_batch):
            lr = triangular_lr(iteration, sched)
            z_s = model.forward_latent(source.inputs(idx_s), training=True, rng=rng_drop)
            z_t = model.forward_latent(target.inputs(idx_t), training=True, rng=rng_drop)
            l_cs = weighted_cross_entropy(model.forward_classifier(z_s), source.labels[idx_s], counts_s)
            l_ct = weighted_cross_entropy(model.forward_classifier(z_t), target.labels[idx_t], counts_t)
            l_da = contrastive_alignment_loss(z_s, source.labels[idx_s], z_t, target.labels[idx_t], config.margin)
            loss = total_loss(l_cs, l_ct, l_da, config.xi)
            model.zero_grad()
            loss.backward()
            adam_step(model.parameters(), state, lr)
            history.append(iteration, float(l_cs.data), float(l_ct.data), float(l_da.data), float(loss.data), lr)
            iteration += 1
        f1 = _validate(model, val, n_classes)
        if f1 is not None:
            history.val_metrics.append((epoch, f1))


def train(
    config: TrainConfig,
    model: Network,
    source: DomainData | None = None,
    target: DomainData | None = None,
    val: DomainData | None = None,
) -> TrainHistory:
    """Train ``model`` in place according to config.mode; returns the history."""
    history = TrainHistory()
    if config.reset_classifier:
        init_classifier(model.spec, make_rng(config.seed, "reset-classifier"), model.params)
    if config.mode == "source_only":
        if source is None:
            raise ValueError("source_only mode needs source data")
        _train_supervised(config, model, source, val, history, "source")
    elif config.mode in ("target_only", "finetune"):
        if target is None:
            raise ValueError(f"{config.mode} mode needs target data")
        _train_supervised(config, model, target, val, history, "target")
    elif config.mode == "finetune_mixed":
        if source is None or target is None:
            raise ValueError("finetune_mixed mode needs both domains")
        _train_supervised(config, model, DomainData.concatenate(source, target), val, history, "source")
    else:  # adapt
        if source is None or target is None:
            raise ValueError("adapt mode needs both domains")
        _train_adapt(config, model, source, target, val, history)
    return history


class DualStreamClassifier(BaseEstimator, ClassifierMixin):
    """sklearn-style front end over the network builders and trainer.

    fit(X, y, domain=...) takes X as a (n_samples, n_features) array for the
    mlp kind, or a dict with 'image' (n, 1, S, S) and/or 'features' keys for
    cnn/fusion kinds. domain marks each sample 'source' or 'target' (or 0/1);
    it may be omitted for single-domain modes, in which case all samples
    belong to the mode's domain.
    """

    def __init__(
        self,
        kind: str = "mlp",
        mode: str = "adapt",
        hidden: int = 512,
        conv_channels: tuple = (8, 16, 32),
        dropout_p: float = 0.5,
        xi: float = 0.3,
        margin: float = 1.0,
        batch_size: int = 32,
        epochs: int = 10,
        zeta_min: float = 1e-5,
        zeta_max: float = 1e-3,
        lr_step_size: int | None = None,
        class_weighting: bool = True,
        seed: int = 0,
    ):
        self.kind = kind
        self.mode = mode
        self.hidden = hidden
        self.conv_channels = conv_channels
        self.dropout_p = dropout_p
        self.xi = xi
        self.margin = margin
        self.batch_size = batch_size
        self.epochs = epochs
        self.zeta_min = zeta_min
        self.zeta_max = zeta_max
        self.lr_step_size = lr_step_size
        self.class_weighting = class_weighting
        self.seed = seed

    def _split_inputs(self, X) -> tuple[np.ndarray | None, np.ndarray | None]:
        if isinstance(X, dict):
            images = None if X.get("image") is None else np.asarray(X["image"], dtype=np.float32)
            feats = None if X.get("features") is None else np.asarray(X["features"], dtype=np.float32)
            return images, feats
        arr = np.asarray(X, dtype=np.float32)
        if arr.ndim == 2:
            return None, arr
        if arr.ndim == 4:
            return arr, None
        raise ValueError(f"cannot interpret X with shape {arr.shape}")

    def fit(self, X, y, domain=None):
        images, feats = self._split_inputs(X)
        y = np.asarray(y, dtype=np.int64)
        n = len(y)
        self.classes_ = np.arange(int(y.max()) + 1)
        if domain is None:
            tags = np.full(n, "target" if self.mode in ("target_only", "finetune") else "source")
        else:
            domain = np.asarray(domain)
            tags = np.where((domain == "target") | (domain == 1), "target", "source")
        spec = NetworkSpec(
            kind=self.kind,
            n_classes=len(self.classes_),
            input_feature_dim=None if feats is None else feats.shape[1],
            input_image_size=None if images is None else images.shape[-1],
            conv_channels=tuple(self.conv_channels),
            hidden=self.hidden,
            dropout_p=self.dropout_p,
        )
        self.model_ = build_network(spec, make_rng(self.seed, "init"))
        config = TrainConfig(
            mode=self.mode,
            xi=self.xi,
            margin=self.margin,
            batch_size=self.batch_size,
            epochs=self.epochs,
            zeta_min=self.zeta_min,
            zeta_max=self.zeta_max,
            lr_step_size=self.lr_step_size,
            seed=self.seed,
            class_weighting=self.class_weighting,
        )

        def bundle(mask) -> DomainData | None:
            if not mask.any():
                return None
            return DomainData(
                labels=y[mask],
                images=None if images is None else images[mask],
                features=None if feats is None else feats[mask],
            )

        self.history_ = train(config, self.model_, source=bundle(tags == "source"), target=bundle(tags == "target"))
        return self

    def predict_proba(self, X) -> np.ndarray:
        images, feats = self._split_inputs(X)
        labels = np.zeros(len(images) if images is not None else len(feats), dtype=np.int64)
        data = DomainData(labels=labels, images=images, features=feats)
        return _predict_in_batches(self.model_, data)

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)
