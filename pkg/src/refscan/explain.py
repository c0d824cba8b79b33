"""Why did the model call a commit refactoring?

Two complementary views:

* **Global** — :func:`split_importance` counts how often each feature is
  chosen as a split across the whole ensemble.
* **Local** — :func:`lime_explain` fits a weighted ridge surrogate on
  perturbations of one row: present terms are randomly dropped, numeric
  values are jittered, and samples are kernel-weighted by cosine
  proximity to the original row.

Sign convention everywhere: class 1 is refactoring, so a POSITIVE weight
pushes the prediction toward refactoring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInstance, EmptyInput
from .pipeline import FeatureSchema

EXPLAIN_VERSION = 1
SIGN_CONVENTION = "positive=refactoring"
DEFAULT_EPSILON = 1e-4

_RIDGE_LAMBDA = 1.0
_NUMERIC_SIGMA = 0.1
_DROP_PROBABILITY = 0.5


@dataclass(frozen=True)
class ExplainConfig:
    n_samples: int = 1000
    top_k: int = 20
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_samples < 2:
            raise ValueError(f"n_samples must be >= 2, got {self.n_samples}")
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")


@dataclass
class Explanation:
    sha: str
    weights: list  # [(feature name, weight)] sorted by |weight| descending
    intercept: float
    local_fit_r2: float

    def to_json(self) -> dict:
        return {
            "sha": self.sha,
            "weights": [[name, w] for name, w in self.weights],
            "intercept": self.intercept,
            "local_fit_r2": self.local_fit_r2,
        }


@dataclass
class AggregateFeature:
    feature: str
    median_weight: float
    direction: str
    split_count: int

    def to_json(self) -> dict:
        return {
            "feature": self.feature,
            "median_weight": self.median_weight,
            "direction": self.direction,
            "split_count": self.split_count,
        }


def _predict_fn(model):
    """Normalise the three accepted model shapes to a matrix -> proba callable."""
    if hasattr(model, "predict_proba"):
        return model.predict_proba
    if callable(model):
        return model
    from .model import predict_proba

    return lambda x: predict_proba(model, x)


def split_importance(model, schema: FeatureSchema) -> dict:
    """Feature name -> number of internal nodes splitting on it, descending.

    Only features that actually appear in a split are included.
    """
    names = schema.feature_names()
    items = [(names[idx], count) for idx, count in model.split_counts.items() if count > 0]
    items.sort(key=lambda pair: (-pair[1], names.index(pair[0])))
    return dict(items)


def _cosine_distances(samples: np.ndarray, row: np.ndarray) -> np.ndarray:
    row_norm = float(np.linalg.norm(row))
    sample_norms = np.linalg.norm(samples, axis=1)
    dots = samples @ row
    denom = sample_norms * row_norm
    with np.errstate(invalid="ignore", divide="ignore"):
        sim = np.where(denom > 0, dots / denom, 0.0)
    return 1.0 - sim


def _weighted_ridge(design: np.ndarray, target: np.ndarray, weights: np.ndarray):
    """Ridge with unpenalised intercept; returns (intercept, coefs, r2)."""
    n, d = design.shape
    a = np.concatenate([np.ones((n, 1)), design], axis=1)
    aw = a * weights[:, None]
    m = a.T @ aw
    m[1:, 1:] += _RIDGE_LAMBDA * np.eye(d)
    b = aw.T @ target
    beta = np.linalg.solve(m, b)

    fitted = a @ beta
    w_mean = float(np.sum(weights * target) / np.sum(weights))
    ss_res = float(np.sum(weights * (target - fitted) ** 2))
    ss_tot = float(np.sum(weights * (target - w_mean) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return float(beta[0]), beta[1:], r2


def lime_explain(
    model,
    schema: FeatureSchema,
    row: np.ndarray,
    config: ExplainConfig = ExplainConfig(),
    sha: str = "",
) -> Explanation:
    """Local surrogate explanation of one schema-transformed row.

    Active features are the row's present terms plus every numeric column;
    a row with no active features raises :class:`DegenerateInstance`.
    """
    predict = _predict_fn(model)
    row = np.asarray(row, dtype=np.float64).ravel()
    n_vocab = len(schema.vocabulary)
    n_numeric = len(schema.numeric_columns)
    present = np.flatnonzero(row[:n_vocab] > 0.0)
    n_active = present.shape[0] + n_numeric
    if n_active == 0:
        raise DegenerateInstance(
            f"row {sha or '<unnamed>'} has no present terms and no numeric columns"
        )

    rng = np.random.default_rng(config.seed)
    n = config.n_samples
    keep_mask = rng.random((n, present.shape[0])) >= _DROP_PROBABILITY
    noise = rng.normal(0.0, _NUMERIC_SIGMA, (n, n_numeric))

    samples = np.tile(row, (n, 1))
    if present.shape[0]:
        samples[:, present] = keep_mask.astype(np.float64)
    if n_numeric:
        block = np.clip(row[n_vocab:] + noise, 0.0, 1.0)
        samples[:, n_vocab:] = block

    target = np.asarray(predict(np.ascontiguousarray(samples)), dtype=np.float64)
    sigma_k = 0.75 * math.sqrt(n_active)
    distances = _cosine_distances(samples, row)
    kernel = np.exp(-(distances**2) / (sigma_k**2))

    # Design: 0/1 keep-flags for present terms, perturbed values for numerics.
    columns = [f"term:{schema.vocabulary[i]}" for i in present]
    columns += list(schema.numeric_columns)
    design = np.concatenate(
        [keep_mask.astype(np.float64), samples[:, n_vocab:]], axis=1
    )

    intercept, coefs, r2 = _weighted_ridge(design, target, kernel)
    order = sorted(range(len(columns)), key=lambda j: (-abs(float(coefs[j])), j))
    top = [(columns[j], float(coefs[j])) for j in order[: config.top_k]]
    return Explanation(sha=sha, weights=top, intercept=intercept, local_fit_r2=r2)


def aggregate_explanations(
    explanations,
    split_counts: dict | None = None,
    epsilon: float = DEFAULT_EPSILON,
) -> list:
    """Median weight per feature over the instances that reported it.

    Direction is refactoring above +epsilon, non_refactoring below
    -epsilon, neutral in between.  Ordered by |median| descending.
    """
    explanations = list(explanations)
    if not explanations:
        raise EmptyInput("no explanations to aggregate")
    split_counts = split_counts or {}

    by_feature: dict = {}
    for expl in explanations:
        for name, weight in expl.weights:
            by_feature.setdefault(name, []).append(weight)

    rows = []
    for name in sorted(by_feature):
        median = float(np.median(by_feature[name]))
        if median > epsilon:
            direction = "refactoring"
        elif median < -epsilon:
            direction = "non_refactoring"
        else:
            direction = "neutral"
        rows.append(
            AggregateFeature(
                feature=name,
                median_weight=median,
                direction=direction,
                split_count=int(split_counts.get(name, 0)),
            )
        )
    rows.sort(key=lambda r: (-abs(r.median_weight), r.feature))
    return rows


def report_json(explanations, aggregate) -> dict:
    return {
        "version": EXPLAIN_VERSION,
        "sign_convention": SIGN_CONVENTION,
        "instances": [e.to_json() for e in explanations],
        "aggregate": [a.to_json() for a in aggregate],
    }
