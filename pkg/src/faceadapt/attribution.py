"""Expected-gradients attribution and landmark-feature ranking.

Attributions are Monte-Carlo estimates of the path-integral form: average
over (baseline b, alpha ~ U(0,1)) of (x - b) * grad f_class(b + alpha(x-b)),
with baselines drawn from the training data. For a frozen model and a seeded
generator the estimate is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn import Tensor, weighted_sum

__all__ = ["Attribution", "expected_gradients", "rank_landmark_features", "attribution_heatmap"]


@dataclass(frozen=True)
class Attribution:
    """Per-element attribution values, shaped exactly like each input modality."""

    values: dict  # modality name -> array shaped like the input
    class_index: int
    n_samples: int


def _as_single(inputs: dict) -> dict:
    out = {}
    for key, arr in inputs.items():
        arr = np.asarray(arr, dtype=np.float64)
        out[key] = arr
    return out


def expected_gradients(
    model,
    inputs: dict,
    baselines: list,
    class_index: int | None = None,
    n_samples: int = 128,
    rng: np.random.Generator | None = None,
) -> Attribution:
    """Attribution of model's class logit for one sample.

    ``inputs`` maps modality ('image'/'features') to a single-sample array
    with leading batch dim 1; ``baselines`` is a non-empty list of dicts with
    the same shapes. class_index defaults to the model's predicted class.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if not baselines:
        raise ValueError("baselines must be non-empty")
    x = _as_single(inputs)
    bases = [_as_single(b) for b in baselines]
    for b in bases:
        if set(b) != set(x) or any(b[k].shape != x[k].shape for k in x):
            raise ValueError("baseline shapes do not match the input")

    if class_index is None:
        class_index = int(np.argmax(model.forward_logits(x, training=False).data[0]))

    acc = {k: np.zeros_like(v) for k, v in x.items()}
    keys = sorted(x)
    for _ in range(n_samples):
        b = bases[int(rng.integers(len(bases)))]
        alpha = float(rng.uniform())
        tensors = {k: Tensor(b[k] + alpha * (x[k] - b[k]), requires_grad=True) for k in keys}
        logits = model.forward_logits(tensors, training=False)
        onehot = np.zeros_like(logits.data)
        onehot[0, class_index] = 1.0
        weighted_sum(logits, onehot).backward()
        for k in keys:
            grad = tensors[k].grad
            acc[k] += (x[k] - b[k]) * (grad if grad is not None else 0.0)
    values = {k: acc[k] / n_samples for k in keys}
    return Attribution(values=values, class_index=class_index, n_samples=n_samples)


def rank_landmark_features(attributions, descriptors) -> list:
    """Rank features by mean absolute attribution across samples.

    ``attributions`` is (n_samples, n_features); returns a descending list of
    (feature_index, descriptor, mean_abs) with ties broken by feature index.
    """
    arr = np.atleast_2d(np.asarray(attributions, dtype=np.float64))
    if arr.shape[0] < 1:
        raise ValueError("need at least one attributed sample")
    if arr.shape[1] != len(descriptors):
        raise ValueError("descriptor count does not match attribution width")
    mean_abs = np.abs(arr).mean(axis=0)
    order = np.lexsort((np.arange(len(mean_abs)), -mean_abs))
    return [(int(i), descriptors[int(i)], float(mean_abs[int(i)])) for i in order]


def attribution_heatmap(values: np.ndarray) -> np.ndarray:
    """Affinely map attribution values to [0, 1] for PGM emission."""
    arr = np.asarray(values, dtype=np.float64)
    lo, hi = float(arr.min()), float(arr.max())
    if hi - lo < 1e-300:
        return np.full(arr.shape, 0.5)
    return (arr - lo) / (hi - lo)
