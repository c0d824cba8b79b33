"""Reference classifiers the boosted model is compared against.

Four deliberately simple learners sharing the boosted model's input
conventions (dense matrix, class 1 = refactoring) and its determinism
guarantees:

* ``decision_tree`` — single CART tree, gini impurity, midpoint thresholds.
* ``random_forest`` — bootstrapped CART trees on per-tree feature subsets,
  probabilities averaged.
* ``complement_naive_bayes`` — per-class complement likelihoods with
  additive smoothing, softmax over the two scores.
* ``knn`` — k nearest neighbours by Euclidean distance, probability =
  positive fraction among the neighbours, ties by training-row index.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ._kernels import apply_tree, pairwise_sqdist
from .errors import SingleClassInput, UnknownModelKind, WidthMismatch
from .model import MODEL_VERSION, Tree
from .pipeline import FeatureMatrix

KINDS = ("decision_tree", "random_forest", "complement_naive_bayes", "knn")


@dataclass(frozen=True)
class BaselineParams:
    max_depth: int = 5
    n_trees: int = 100
    k: int = 5
    alpha: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.n_trees < 1:
            raise ValueError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "BaselineParams":
        return cls(
            max_depth=int(obj["max_depth"]),
            n_trees=int(obj["n_trees"]),
            k=int(obj["k"]),
            alpha=float(obj["alpha"]),
            seed=int(obj["seed"]),
        )


def _check_both_classes(y: np.ndarray) -> None:
    n_pos = int(np.count_nonzero(y == 1))
    if n_pos == 0 or n_pos == y.shape[0]:
        raise SingleClassInput(
            f"training needs both classes; got {n_pos} positive of {y.shape[0]} rows"
        )


def _best_gini_split(x: np.ndarray, y: np.ndarray, columns) -> tuple | None:
    """(feature, threshold) minimising weighted child gini, or None.

    Thresholds are midpoints between consecutive distinct values; ties keep
    the earliest feature then the lowest threshold.
    """
    n = y.shape[0]
    total_pos = float(np.sum(y))
    best = None  # (impurity, feature, threshold)
    for j in columns:
        order = np.argsort(x[:, j], kind="stable")
        xs = x[order, j]
        cum_pos = np.cumsum(y[order])
        # Split between positions i and i+1 only where the value changes.
        cuts = np.flatnonzero(xs[:-1] < xs[1:])
        if cuts.shape[0] == 0:
            continue
        n_left = cuts + 1.0
        pos_left = cum_pos[cuts]
        n_right = n - n_left
        pos_right = total_pos - pos_left
        p_l = pos_left / n_left
        p_r = pos_right / n_right
        weighted = (n_left * 2 * p_l * (1 - p_l) + n_right * 2 * p_r * (1 - p_r)) / n
        i = int(np.argmin(weighted))
        score = float(weighted[i])
        if best is None or score < best[0]:
            cut = cuts[i]
            best = (score, int(j), float((xs[cut] + xs[cut + 1]) / 2.0))
    if best is None:
        return None
    return best[1], best[2]


def _grow_cart(x: np.ndarray, y: np.ndarray, max_depth: int, columns) -> Tree:
    feat = []
    thr = []
    left = []
    right = []
    val = []

    def build(rows: np.ndarray, depth: int) -> int:
        node = len(feat)
        feat.append(-1)
        thr.append(0.0)
        left.append(-1)
        right.append(-1)
        sub_y = y[rows]
        val.append(float(np.mean(sub_y)))
        if depth >= max_depth or sub_y.shape[0] < 2:
            return node
        if sub_y.all() or not sub_y.any():
            return node
        split = _best_gini_split(x[rows], sub_y, columns)
        if split is None:
            return node
        j, threshold = split
        go_left = x[rows, j] <= threshold
        feat[node] = j
        thr[node] = threshold
        val[node] = 0.0
        left[node] = build(rows[go_left], depth + 1)
        right[node] = build(rows[~go_left], depth + 1)
        return node

    build(np.arange(x.shape[0], dtype=np.int64), 0)
    return Tree(
        feat=np.asarray(feat, dtype=np.int32),
        thr=np.asarray(thr, dtype=np.float64),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        val=np.asarray(val, dtype=np.float64),
    )


@dataclass
class BaselineModel:
    kind: str
    params: BaselineParams
    payload: dict
    schema_hash: str = ""

    KINDS = KINDS

    def _trees(self):
        return [Tree.from_json(t) for t in self.payload["trees"]]

    def predict_proba(self, x):
        arr = np.asarray(x, dtype=np.float64)
        single = arr.ndim == 1
        x2 = np.ascontiguousarray(np.atleast_2d(arr))
        proba = self._predict_matrix(x2)
        return float(proba[0]) if single else proba

    def _predict_matrix(self, x: np.ndarray) -> np.ndarray:
        if self.kind in ("decision_tree", "random_forest"):
            trees = self._trees()
            widest = max((int(t.feat.max()) for t in trees if t.feat.shape[0]), default=-1)
            if x.shape[1] <= widest:
                raise WidthMismatch(
                    f"input has {x.shape[1]} columns but a tree splits on index {widest}"
                )
            total = np.zeros(x.shape[0], dtype=np.float64)
            for t in trees:
                total += apply_tree(t.feat, t.thr, t.left, t.right, t.val, x)
            return total / len(trees)

        if self.kind == "complement_naive_bayes":
            w = np.asarray(self.payload["weights"], dtype=np.float64)  # (2, d)
            if x.shape[1] != w.shape[1]:
                raise WidthMismatch(f"input has {x.shape[1]} columns, model expects {w.shape[1]}")
            scores = -(x @ w.T)  # (n, 2): complement score per class
            scores -= scores.max(axis=1, keepdims=True)
            e = np.exp(scores)
            return e[:, 1] / e.sum(axis=1)

        if self.kind == "knn":
            train_x = np.asarray(self.payload["x"], dtype=np.float64)
            train_y = np.asarray(self.payload["y"], dtype=np.float64)
            if x.shape[1] != train_x.shape[1]:
                raise WidthMismatch(
                    f"input has {x.shape[1]} columns, model expects {train_x.shape[1]}"
                )
            sq = pairwise_sqdist(np.ascontiguousarray(x), np.ascontiguousarray(train_x))
            k = min(self.params.k, train_x.shape[0])
            positions = np.arange(train_x.shape[0])
            out = np.empty(x.shape[0], dtype=np.float64)
            for i in range(x.shape[0]):
                order = np.lexsort((positions, sq[i]))
                out[i] = float(np.mean(train_y[order[:k]]))
            return out

        raise UnknownModelKind(f"unknown model kind {self.kind!r}")

    def to_json(self) -> dict:
        return {
            "version": MODEL_VERSION,
            "kind": self.kind,
            "schema_hash": self.schema_hash,
            "params": self.params.to_json(),
            "model": self.payload,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BaselineModel":
        kind = str(obj["kind"])
        if kind not in KINDS:
            raise UnknownModelKind(f"unknown model kind {kind!r}")
        return cls(
            kind=kind,
            params=BaselineParams.from_json(obj["params"]),
            payload=obj["model"],
            schema_hash=str(obj.get("schema_hash", "")),
        )


def train_baseline(
    kind: str, matrix: FeatureMatrix, params: BaselineParams = BaselineParams()
) -> BaselineModel:
    """Fit one baseline; raises SingleClassInput unless both classes appear."""
    if kind not in KINDS:
        raise UnknownModelKind(f"unknown model kind {kind!r}")
    y = np.asarray(matrix.labels, dtype=np.float64)
    _check_both_classes(y)
    dense = np.ascontiguousarray(matrix.to_dense(), dtype=np.float64)
    n, d = dense.shape
    schema_hash = matrix.schema.content_hash()

    if kind == "decision_tree":
        tree = _grow_cart(dense, y, params.max_depth, range(d))
        payload = {"trees": [tree.to_json()]}
    elif kind == "random_forest":
        rng = np.random.default_rng(params.seed)
        m = max(1, int(math.isqrt(d)))
        trees = []
        for _ in range(params.n_trees):
            rows = np.sort(rng.integers(0, n, n))
            columns = np.sort(rng.permutation(d)[:m])
            trees.append(_grow_cart(dense[rows], y[rows], params.max_depth, columns).to_json())
        payload = {"trees": trees}
    elif kind == "complement_naive_bayes":
        weights = []
        col_sums_by_class = [dense[y != c].sum(axis=0) for c in (0.0, 1.0)]
        for counts in col_sums_by_class:
            theta = (params.alpha + counts) / (params.alpha * d + float(counts.sum()))
            weights.append(np.log(theta).tolist())
        payload = {"weights": weights}
    else:  # knn
        payload = {"x": dense.tolist(), "y": y.astype(int).tolist()}

    return BaselineModel(kind=kind, params=params, payload=payload, schema_hash=schema_hash)
