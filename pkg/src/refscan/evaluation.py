"""Dataset splitting and metric computation.

Three evaluation settings are supported, mirroring how detection quality
is usually reported for commit classifiers:

* ``mixed`` — one seeded, unstratified 80/20 split over all projects.
* ``within_project`` — one fold per project, split 80/20 inside it.
* ``cross_project`` — leave-one-project-out: each fold tests a whole
  project and trains on all the others.

AUC uses the rank formulation (Mann-Whitney) with average ranks for tied
scores, which is arithmetically identical to exhaustive pair counting
with 0.5 credit per tie.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyDataset, EmptyInput, LengthMismatch
from .pipeline import _average_ranks

STRATEGIES = ("mixed", "within_project", "cross_project")


@dataclass(frozen=True)
class SplitPlan:
    strategy: str = "mixed"
    test_ratio: float = 0.2
    seed: int = 0

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(
                f"unknown split strategy {self.strategy!r}; expected one of {STRATEGIES}"
            )
        if not 0.0 < self.test_ratio < 1.0:
            raise ValueError(f"test_ratio must be in (0, 1), got {self.test_ratio}")


@dataclass
class EvalReport:
    setting: str
    threshold: float
    tp: int
    fp: int
    tn: int
    fn: int
    precision: float
    recall: float
    f1: float
    auc: float
    degenerate: bool = False

    def to_json(self) -> dict:
        return {
            "setting": self.setting,
            "threshold": self.threshold,
            "tp": self.tp,
            "fp": self.fp,
            "tn": self.tn,
            "fn": self.fn,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "auc": self.auc,
            "degenerate": self.degenerate,
        }


def _test_count(n: int, ratio: float) -> int:
    count = int(n * ratio + 1e-9)
    if count == 0 and n > 1:
        count = 1
    return count


def make_splits(projects, plan: SplitPlan):
    """Fold list [(name, train_indices, test_indices)] for the plan.

    ``projects`` is the per-row project id; only its length matters for the
    mixed strategy.  Indices come back sorted ascending.
    """
    projects = list(projects)
    n = len(projects)
    if n == 0:
        raise EmptyDataset("cannot split an empty dataset")

    rng = np.random.default_rng(plan.seed)
    folds = []
    if plan.strategy == "mixed":
        perm = rng.permutation(n)
        n_test = _test_count(n, plan.test_ratio)
        test = np.sort(perm[:n_test])
        train = np.sort(perm[n_test:])
        folds.append(("mixed", train, test))
    elif plan.strategy == "within_project":
        for name in sorted(set(projects)):
            rows = np.flatnonzero(np.asarray([p == name for p in projects]))
            perm = rng.permutation(rows.shape[0])
            n_test = _test_count(rows.shape[0], plan.test_ratio)
            test = np.sort(rows[perm[:n_test]])
            train = np.sort(rows[perm[n_test:]])
            folds.append((name, train, test))
    else:  # cross_project
        arr = np.asarray(projects, dtype=object)
        for name in sorted(set(projects)):
            mask = arr == name
            folds.append((name, np.flatnonzero(~mask), np.flatnonzero(mask)))
    return folds


def rank_auc(labels, scores) -> float:
    """Probability a random positive outranks a random negative (ties 0.5).

    Single-class inputs return 0.5; callers decide whether that needs a
    degenerate flag.
    """
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=np.float64)
    if labels.shape[0] != scores.shape[0]:
        raise LengthMismatch(
            f"{labels.shape[0]} labels vs {scores.shape[0]} scores"
        )
    pos = labels == 1
    n_pos = int(np.count_nonzero(pos))
    n_neg = labels.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        return 0.5
    ranks = _average_ranks(scores)  # 1-based, ties averaged
    rank_sum = float(np.sum(ranks[pos]))
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def evaluate(scores, labels, threshold: float = 0.5, setting: str = "") -> EvalReport:
    """Confusion counts at the threshold plus ranking AUC."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape[0] != labels.shape[0]:
        raise LengthMismatch(f"{scores.shape[0]} scores vs {labels.shape[0]} labels")
    if scores.shape[0] == 0:
        raise EmptyInput("cannot evaluate an empty fold")

    pred = scores >= threshold
    actual = labels == 1
    tp = int(np.count_nonzero(pred & actual))
    fp = int(np.count_nonzero(pred & ~actual))
    fn = int(np.count_nonzero(~pred & actual))
    tn = int(np.count_nonzero(~pred & ~actual))

    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    degenerate = actual.all() or not actual.any()
    auc = rank_auc(labels, scores)

    return EvalReport(
        setting=setting,
        threshold=float(threshold),
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        precision=precision,
        recall=recall,
        f1=f1,
        auc=auc,
        degenerate=bool(degenerate),
    )


def summarize(reports) -> dict:
    """Median of each headline metric across folds."""
    return {
        "median_precision": float(np.median([r.precision for r in reports])),
        "median_recall": float(np.median([r.recall for r in reports])),
        "median_auc": float(np.median([r.auc for r in reports])),
        "median_f1": float(np.median([r.f1 for r in reports])),
    }


def run_fold(
    train_rows,
    test_rows,
    *,
    model_kind: str = "gbdt",
    sampler=None,
    search_budget: int = 0,
    seed: int = 0,
    threshold: float = 0.5,
    setting: str = "",
) -> EvalReport:
    """Fit everything inside the fold and score the held-out rows.

    The schema is fitted on the training rows only, so no statistic of the
    test rows leaks into vocabulary selection, pruning, or scaling.
    """
    from . import baselines, sampling
    from .model import GbdtParams, predict_proba, random_search, train_gbdt
    from .pipeline import fit_schema, transform

    schema = fit_schema(train_rows)
    train_m = transform(train_rows, schema)
    test_m = transform(test_rows, schema)

    if sampler is not None:
        train_m = sampling.undersample(train_m, sampler)

    if model_kind == "gbdt":
        if search_budget >= 1:
            params, _ = random_search(train_m, budget=search_budget, seed=seed)
        else:
            params = GbdtParams(seed=seed)
        fitted = train_gbdt(train_m, params)
        scores = predict_proba(fitted, test_m.to_dense())
    else:
        fitted = baselines.train_baseline(
            model_kind, train_m, baselines.BaselineParams(seed=seed)
        )
        scores = fitted.predict_proba(test_m.to_dense())

    return evaluate(scores, np.asarray(test_m.labels), threshold, setting=setting)


def run_evaluation(
    rows,
    plan: SplitPlan,
    *,
    model_kind: str = "gbdt",
    sampler=None,
    search_budget: int = 0,
    threshold: float = 0.5,
) -> dict:
    """Split, train per fold, and assemble the report object."""
    folds = make_splits([r.project for r in rows], plan)
    reports = []
    for name, train_idx, test_idx in folds:
        report = run_fold(
            [rows[i] for i in train_idx],
            [rows[i] for i in test_idx],
            model_kind=model_kind,
            sampler=sampler,
            search_budget=search_budget,
            seed=plan.seed,
            threshold=threshold,
            setting=f"{plan.strategy}:{name}" if plan.strategy != "mixed" else "mixed",
        )
        reports.append(report)
    return {
        "setting": plan.strategy,
        "seed": plan.seed,
        "folds": [r.to_json() for r in reports],
        "summary": summarize(reports),
    }
