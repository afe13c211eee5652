"""Classification metrics: overall F1, one-vs-rest ROC/AUC, confusion matrix."""

from __future__ import annotations

import numpy as np

__all__ = ["confusion", "per_class_f1", "f1_overall", "roc_auc_ovr", "roc_curve_points"]


def confusion(predictions, labels, n_classes: int) -> np.ndarray:
    """Counts[t, p] of samples with true class t predicted as p."""
    preds = np.asarray(predictions, dtype=np.int64)
    truth = np.asarray(labels, dtype=np.int64)
    if preds.shape != truth.shape or preds.ndim != 1:
        raise ValueError("predictions and labels must be aligned 1-D sequences")
    if len(preds) == 0:
        raise ValueError("empty input")
    out = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(out, (truth, preds), 1)
    return out


def per_class_f1(predictions, labels, n_classes: int) -> np.ndarray:
    """F1 per class; a class with no true or predicted samples scores 0."""
    cm = confusion(predictions, labels, n_classes)
    tp = np.diag(cm).astype(np.float64)
    denom = cm.sum(axis=1) + cm.sum(axis=0)  # 2*tp + fn + fp
    return np.divide(2.0 * tp, denom, out=np.zeros(n_classes), where=denom > 0)


def f1_overall(predictions, labels, n_classes: int, average: str = "macro") -> float:
    """Overall F1. Default is the unweighted (macro) mean over all classes,
    counting classes absent from both predictions and labels as 0; micro and
    support-weighted variants are exposed for sensitivity checks."""
    f1 = per_class_f1(predictions, labels, n_classes)
    if average == "macro":
        return float(f1.mean())
    cm = confusion(predictions, labels, n_classes)
    support = cm.sum(axis=1)
    if average == "micro":
        return float(np.diag(cm).sum() / cm.sum())
    if average == "weighted":
        return float((f1 * support).sum() / support.sum())
    raise ValueError(f"unknown average {average!r}")


def _average_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned their group's mean rank."""
    _, inverse, counts = np.unique(x, return_inverse=True, return_counts=True)
    ends = np.cumsum(counts).astype(np.float64)
    starts = ends - counts + 1
    return ((starts + ends) / 2.0)[inverse]


def roc_auc_ovr(scores, labels) -> tuple[np.ndarray, float, list]:
    """One-vs-rest AUC per class via the rank statistic (ties count 1/2).

    Returns (per-class AUC with NaN where undefined, macro average over the
    defined classes, list of excluded class indices). A class is undefined
    when it has no positives or no negatives.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if s.ndim != 2 or s.shape[0] != len(y):
        raise ValueError("scores must be (n_samples, n_classes) aligned with labels")
    n, k = s.shape
    aucs = np.full(k, np.nan)
    excluded = []
    for c in range(k):
        pos = y == c
        n_pos = int(pos.sum())
        n_neg = n - n_pos
        if n_pos == 0 or n_neg == 0:
            excluded.append(c)
            continue
        ranks = _average_ranks(s[:, c])
        aucs[c] = (ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
    defined = ~np.isnan(aucs)
    macro = float(aucs[defined].mean()) if defined.any() else float("nan")
    return aucs, macro, excluded


def roc_curve_points(scores, binary_labels) -> list[tuple[float, float, float]]:
    """(fpr, tpr, threshold) points for one class's score column, descending."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(binary_labels, dtype=bool)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC curve undefined without both positives and negatives")
    order = np.argsort(-s, kind="mergesort")
    sorted_y = y[order]
    sorted_s = s[order]
    tps = np.cumsum(sorted_y)
    fps = np.cumsum(~sorted_y)
    # keep the last point of each distinct-threshold run
    distinct = np.nonzero(np.diff(sorted_s))[0]
    idx = np.concatenate([distinct, [len(s) - 1]])
    points = [(0.0, 0.0, float("inf"))]
    for i in idx:
        points.append((fps[i] / n_neg, tps[i] / n_pos, float(sorted_s[i])))
    return points
