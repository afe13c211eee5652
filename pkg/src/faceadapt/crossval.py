"""Subject-disjoint fold plans and evaluation reports.

Folds are assigned per subject, never per sample, so no person contributes
to both the train and test side of any split. Source and target domains are
split independently and paired by fold index.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .rng import make_rng

__all__ = ["FoldPlan", "subject_disjoint_folds", "FoldResult", "EvalReport"]


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignment: dict  # subject_id -> fold index
    seed: int

    def fold_of(self, subject_id) -> int:
        return self.assignment[subject_id]

    def test_mask(self, subject_ids, fold: int) -> np.ndarray:
        return np.array([self.assignment[s] == fold for s in subject_ids])

    def subjects_in(self, fold: int) -> set:
        return {s for s, f in self.assignment.items() if f == fold}


def subject_disjoint_folds(subjects, k: int, seed: int) -> FoldPlan:
    """Deal shuffled subjects round-robin into k folds (sizes differ by <= 1)."""
    if hasattr(subjects, "subject_ids"):
        subjects = subjects.subject_ids()
    uniq = sorted(set(subjects))
    if len(uniq) < k:
        raise ValueError(f"need at least {k} subjects for {k} folds, have {len(uniq)}")
    rng = make_rng(seed, "subject-folds")
    order = [uniq[i] for i in rng.permutation(len(uniq))]
    return FoldPlan(k=k, assignment={s: i % k for i, s in enumerate(order)}, seed=seed)


@dataclass
class FoldResult:
    fold: int
    selected_xi: float | None
    n_selected_features: int | None
    metrics: dict  # scope ("pooled"/"source"/"target") -> metric dict

    def to_json(self) -> dict:
        return {
            "fold": self.fold,
            "selected_xi": self.selected_xi,
            "n_selected_features": self.n_selected_features,
            "metrics": self.metrics,
        }


@dataclass
class EvalReport:
    folds: list = field(default_factory=list)  # of FoldResult
    aggregate: dict = field(default_factory=dict)

    def finalize(self) -> None:
        """Aggregate mean/std macro F1 and AUC across folds, per scope."""
        agg = {}
        scopes = self.folds[0].metrics.keys() if self.folds else ()
        for scope in scopes:
            f1s = np.array([f.metrics[scope]["macro_f1"] for f in self.folds])
            aucs = np.array([f.metrics[scope]["macro_auc"] for f in self.folds], dtype=np.float64)
            agg[scope] = {
                "macro_f1_mean": float(f1s.mean()),
                "macro_f1_std": float(f1s.std()),
                "macro_auc_mean": float(np.nanmean(aucs)),
            }
        agg["selected_xi"] = [f.selected_xi for f in self.folds]
        self.aggregate = agg

    def to_json(self) -> dict:
        return {"folds": [f.to_json() for f in self.folds], "aggregate": self.aggregate}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, obj: dict) -> "EvalReport":
        report = cls()
        for f in obj["folds"]:
            report.folds.append(
                FoldResult(
                    fold=f["fold"],
                    selected_xi=f["selected_xi"],
                    n_selected_features=f["n_selected_features"],
                    metrics=f["metrics"],
                )
            )
        report.aggregate = obj.get("aggregate", {})
        return report
