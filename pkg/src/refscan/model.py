"""Gradient-boosted decision trees over histogram splits, plus random search.

This is the primary classifier.  Training is deliberately self-contained:

* Feature values are bucketed once per training run into at most ``n_bins``
  bins whose boundaries are actual sample values (order statistics).  A
  split rule is always ``value <= threshold``, so any strictly increasing
  transform of a column leaves every split decision unchanged.
* Trees grow leaf-wise: the candidate leaf with the largest gain splits
  first, until ``max_leaves`` is reached or no candidate improves the loss.
* Loss is logistic; leaf values are Newton steps ``-G / (H + 1)`` stored
  raw, with ``learning_rate`` applied at prediction time.

Everything is deterministic given the seed, and the heavy inner loops
(histogram accumulation, tree traversal) run on the compiled kernel when
it is available.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import asdict, dataclass

import numpy as np

from ._kernels import apply_tree, build_histograms
from .errors import SingleClassInput, UnknownModelKind, WidthMismatch
from .pipeline import FeatureMatrix

MODEL_VERSION = 1

# L2 regularisation applied to every gain and leaf-value computation.
_LAMBDA = 1.0
# Candidates whose gain does not clear this bar are not worth a split.
_MIN_GAIN = 1e-12
# Probabilities are clipped away from {0, 1} so log-loss stays finite.
_PROB_EPS = 1e-12

DEFAULT_SEARCH_SPACE = {
    "n_trees": (100, 200, 400),
    "learning_rate": ("log-uniform", 0.01, 0.3),
    "max_leaves": (15, 31, 63),
    "min_samples_leaf": (5, 20, 50),
    "subsample": (0.7, 1.0),
}


@dataclass(frozen=True)
class GbdtParams:
    n_trees: int = 200
    learning_rate: float = 0.1
    max_leaves: int = 31
    min_samples_leaf: int = 20
    n_bins: int = 256
    subsample: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ValueError(f"n_trees must be >= 1, got {self.n_trees}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.max_leaves < 2:
            raise ValueError(f"max_leaves must be >= 2, got {self.max_leaves}")
        if self.min_samples_leaf < 1:
            raise ValueError(f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")
        if not 2 <= self.n_bins <= 256:
            # Bin indices are stored as uint8 for the histogram kernel.
            raise ValueError(f"n_bins must be in [2, 256], got {self.n_bins}")
        if not 0.0 < self.subsample <= 1.0:
            raise ValueError(f"subsample must be in (0, 1], got {self.subsample}")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "GbdtParams":
        return cls(
            n_trees=int(obj["n_trees"]),
            learning_rate=float(obj["learning_rate"]),
            max_leaves=int(obj["max_leaves"]),
            min_samples_leaf=int(obj["min_samples_leaf"]),
            n_bins=int(obj["n_bins"]),
            subsample=float(obj["subsample"]),
            seed=int(obj["seed"]),
        )


@dataclass
class Tree:
    """One flattened binary tree.

    ``feat[i] < 0`` marks node ``i`` as a leaf holding ``val[i]``; internal
    nodes send rows with ``x[:, feat[i]] <= thr[i]`` to ``left[i]``.
    """

    feat: np.ndarray
    thr: np.ndarray
    left: np.ndarray
    right: np.ndarray
    val: np.ndarray

    @property
    def n_internal(self) -> int:
        return int(np.count_nonzero(self.feat >= 0))

    def to_json(self) -> list:
        nodes = []
        for i in range(self.feat.shape[0]):
            if self.feat[i] < 0:
                nodes.append({"value": float(self.val[i])})
            else:
                nodes.append(
                    {
                        "feature_index": int(self.feat[i]),
                        "threshold": float(self.thr[i]),
                        "left": int(self.left[i]),
                        "right": int(self.right[i]),
                    }
                )
        return nodes

    @classmethod
    def from_json(cls, nodes: list) -> "Tree":
        n = len(nodes)
        feat = np.full(n, -1, dtype=np.int32)
        thr = np.zeros(n, dtype=np.float64)
        left = np.full(n, -1, dtype=np.int32)
        right = np.full(n, -1, dtype=np.int32)
        val = np.zeros(n, dtype=np.float64)
        for i, node in enumerate(nodes):
            if "value" in node:
                val[i] = float(node["value"])
            else:
                feat[i] = int(node["feature_index"])
                thr[i] = float(node["threshold"])
                left[i] = int(node["left"])
                right[i] = int(node["right"])
        return cls(feat=feat, thr=thr, left=left, right=right, val=val)


@dataclass
class GbdtModel:
    base_score: float
    trees: list
    params: GbdtParams
    split_counts: dict  # feature index -> number of internal nodes using it
    schema_hash: str = ""

    @property
    def min_width(self) -> int:
        """Smallest input width the trees can be applied to."""
        widest = -1
        for tree in self.trees:
            if tree.feat.shape[0] and tree.feat.max() > widest:
                widest = int(tree.feat.max())
        return widest + 1

    def to_json(self) -> dict:
        counts = {str(k): self.split_counts[k] for k in sorted(self.split_counts)}
        return {
            "version": MODEL_VERSION,
            "schema_hash": self.schema_hash,
            "params": self.params.to_json(),
            "base_score": self.base_score,
            "trees": [t.to_json() for t in self.trees],
            "split_counts": counts,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GbdtModel":
        return cls(
            base_score=float(obj["base_score"]),
            trees=[Tree.from_json(t) for t in obj["trees"]],
            params=GbdtParams.from_json(obj["params"]),
            split_counts={int(k): int(v) for k, v in obj["split_counts"].items()},
            schema_hash=str(obj.get("schema_hash", "")),
        )


def sigmoid(x):
    # tanh keeps the computation stable for large |x|.
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=np.float64)))


def fit_bin_thresholds(dense: np.ndarray, n_bins: int) -> list:
    """Per-column ascending split thresholds, each an actual sample value.

    Columns with at most ``n_bins`` distinct values keep every gap as a
    potential split; wider columns cut at order statistics.  Because the
    thresholds are sample values compared with ``<=``, the resulting bins
    commute with any strictly increasing column transform.
    """
    n = dense.shape[0]
    thresholds = []
    for j in range(dense.shape[1]):
        distinct = np.unique(dense[:, j])
        if distinct.size <= n_bins:
            thr = distinct[:-1]
        else:
            ordered = np.sort(dense[:, j])
            cuts = (np.arange(1, n_bins, dtype=np.int64) * n) // n_bins
            thr = np.unique(ordered[cuts - 1])
            thr = thr[thr < ordered[-1]]
        thresholds.append(np.ascontiguousarray(thr, dtype=np.float64))
    return thresholds


def bin_matrix(dense: np.ndarray, thresholds: list) -> np.ndarray:
    """uint8 bin index per cell: the count of thresholds strictly below it."""
    binned = np.empty(dense.shape, dtype=np.uint8)
    for j, thr in enumerate(thresholds):
        binned[:, j] = np.searchsorted(thr, dense[:, j], side="left").astype(np.uint8)
    return np.ascontiguousarray(binned)


def _leaf_value(g: float, h: float) -> float:
    return -g / (h + _LAMBDA)


class _FeatureBlocks:
    """Column partition used by the split search.

    Columns with at most one threshold (binary indicators, constants) form
    the ``narrow`` block and are histogrammed with two bins; the remaining
    ``wide`` columns keep the full ``n_bins`` resolution.  Term indicators
    vastly outnumber the numeric columns, so this keeps each histogram
    buffer proportional to the information present rather than
    ``d * n_bins``.
    """

    __slots__ = ("n_features", "n_thr", "narrow_idx", "wide_idx",
                 "binned_narrow", "binned_wide", "splittable")

    def __init__(self, binned: np.ndarray, thresholds: list):
        self.n_features = binned.shape[1]
        self.n_thr = np.asarray([t.shape[0] for t in thresholds], dtype=np.int64)
        self.narrow_idx = np.nonzero(self.n_thr <= 1)[0]
        self.wide_idx = [int(j) for j in np.nonzero(self.n_thr > 1)[0]]
        self.binned_narrow = np.ascontiguousarray(binned[:, self.narrow_idx])
        self.binned_wide = np.ascontiguousarray(binned[:, self.wide_idx])
        # Constant columns have no threshold and can never split.
        self.splittable = self.n_thr[self.narrow_idx] >= 1


def _gain_curve(cg, ch, cc, g_total, h_total, c_total, min_leaf, parent):
    valid = (cc >= min_leaf) & (c_total - cc >= min_leaf)
    rg = g_total - cg
    rh = h_total - ch
    gains = cg * cg / (ch + _LAMBDA) + rg * rg / (rh + _LAMBDA) - parent
    return np.where(valid, gains, -np.inf)


def _best_split(blocks, rows, grad, hess, g_total, h_total, min_leaf, n_bins):
    """Best (gain, feature, bin) over all features, or None.

    Ties go to the lowest feature index, then the lowest bin.  The narrow
    block's single candidate bin is scored as one vector operation across
    all of its columns; each wide column gets a cumulative scan.
    """
    parent = g_total * g_total / (h_total + _LAMBDA)
    c_total = rows.shape[0]
    best_gain = np.full(blocks.n_features, -np.inf)
    best_bin = np.zeros(blocks.n_features, dtype=np.int64)
    if blocks.narrow_idx.size:
        hg, hh, hc = build_histograms(blocks.binned_narrow, rows, grad, hess, 2)
        gains = _gain_curve(
            hg[:, 0], hh[:, 0], hc[:, 0], g_total, h_total, c_total, min_leaf, parent
        )
        gains[~blocks.splittable] = -np.inf
        best_gain[blocks.narrow_idx] = gains
    if blocks.wide_idx:
        hg, hh, hc = build_histograms(blocks.binned_wide, rows, grad, hess, n_bins)
        for k, j in enumerate(blocks.wide_idx):
            nb = blocks.n_thr[j]
            gains = _gain_curve(
                np.cumsum(hg[k])[:nb],
                np.cumsum(hh[k])[:nb],
                np.cumsum(hc[k])[:nb],
                g_total, h_total, c_total, min_leaf, parent,
            )
            b = int(np.argmax(gains))
            best_gain[j] = gains[b]
            best_bin[j] = b
    j = int(np.argmax(best_gain))
    gain = float(best_gain[j])
    if gain <= _MIN_GAIN or not np.isfinite(gain):
        return None
    return (gain, j, int(best_bin[j]))


class _LeafState:
    __slots__ = ("node", "rows", "g", "h", "split")

    def __init__(self, node, rows, g, h, split):
        self.node = node
        self.rows = rows
        self.g = g
        self.h = h
        self.split = split


def _grow_tree(binned, thresholds, blocks, grad, hess, rows, params) -> Tree:
    feat = [-1]
    thr = [0.0]
    left = [-1]
    right = [-1]
    val = [0.0]

    def new_node() -> int:
        feat.append(-1)
        thr.append(0.0)
        left.append(-1)
        right.append(-1)
        val.append(0.0)
        return len(feat) - 1

    def leaf_state(node, node_rows):
        g = float(np.sum(grad[node_rows]))
        h = float(np.sum(hess[node_rows]))
        val[node] = _leaf_value(g, h)
        split = None
        if node_rows.shape[0] >= 2 * params.min_samples_leaf:
            split = _best_split(
                blocks, node_rows, grad, hess, g, h,
                params.min_samples_leaf, params.n_bins,
            )
        return _LeafState(node, node_rows, g, h, split)

    root = leaf_state(0, rows)
    heap = []
    counter = 0
    if root.split is not None:
        heapq.heappush(heap, (-root.split[0], counter, root))
        counter += 1

    n_leaves = 1
    while heap and n_leaves < params.max_leaves:
        _, _, leaf = heapq.heappop(heap)
        _, j, b = leaf.split
        go_left = binned[leaf.rows, j] <= b
        left_rows = leaf.rows[go_left]
        right_rows = leaf.rows[~go_left]

        node = leaf.node
        feat[node] = j
        thr[node] = float(thresholds[j][b])
        val[node] = 0.0
        left[node] = new_node()
        right[node] = new_node()

        for child_node, child_rows in ((left[node], left_rows), (right[node], right_rows)):
            child = leaf_state(child_node, child_rows)
            if child.split is not None:
                heapq.heappush(heap, (-child.split[0], counter, child))
                counter += 1
        n_leaves += 1

    return Tree(
        feat=np.asarray(feat, dtype=np.int32),
        thr=np.asarray(thr, dtype=np.float64),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        val=np.asarray(val, dtype=np.float64),
    )


def train_gbdt(matrix: FeatureMatrix, params: GbdtParams = GbdtParams()) -> GbdtModel:
    """Fit the boosted ensemble on a transformed matrix.

    Raises :class:`SingleClassInput` unless both classes are present.
    """
    y = np.asarray(matrix.labels, dtype=np.float64)
    n = y.shape[0]
    n_pos = int(np.count_nonzero(y == 1))
    if n_pos == 0 or n_pos == n:
        raise SingleClassInput(
            f"training needs both classes; got {n_pos} positive of {n} rows"
        )

    dense = np.ascontiguousarray(matrix.to_dense(), dtype=np.float64)
    thresholds = fit_bin_thresholds(dense, params.n_bins)
    binned = bin_matrix(dense, thresholds)
    blocks = _FeatureBlocks(binned, thresholds)

    prevalence = n_pos / n
    base_score = math.log(prevalence / (1.0 - prevalence))
    score = np.full(n, base_score, dtype=np.float64)
    rng = np.random.default_rng(params.seed)
    n_sampled = max(1, int(params.subsample * n)) if params.subsample < 1.0 else n

    trees = []
    for _ in range(params.n_trees):
        p = sigmoid(score)
        grad = p - y
        hess = p * (1.0 - p)
        if n_sampled < n:
            rows = np.sort(rng.permutation(n)[:n_sampled]).astype(np.int64)
        else:
            rows = np.arange(n, dtype=np.int64)
        tree = _grow_tree(binned, thresholds, blocks, grad, hess, rows, params)
        trees.append(tree)
        score += params.learning_rate * apply_tree(
            tree.feat, tree.thr, tree.left, tree.right, tree.val, dense
        )

    split_counts = {}
    for tree in trees:
        for j in tree.feat[tree.feat >= 0]:
            split_counts[int(j)] = split_counts.get(int(j), 0) + 1
    split_counts = {k: split_counts[k] for k in sorted(split_counts)}

    return GbdtModel(
        base_score=base_score,
        trees=trees,
        params=params,
        split_counts=split_counts,
        schema_hash=matrix.schema.content_hash(),
    )


def predict_margin(model: GbdtModel, x: np.ndarray) -> np.ndarray:
    """Raw additive score before the sigmoid, one value per row."""
    x = np.ascontiguousarray(np.atleast_2d(np.asarray(x, dtype=np.float64)))
    if x.shape[1] < model.min_width:
        raise WidthMismatch(
            f"input has {x.shape[1]} columns but the model splits on "
            f"feature index {model.min_width - 1}"
        )
    score = np.full(x.shape[0], model.base_score, dtype=np.float64)
    for tree in model.trees:
        score += model.params.learning_rate * apply_tree(
            tree.feat, tree.thr, tree.left, tree.right, tree.val, x
        )
    return score


def predict_proba(model: GbdtModel, x: np.ndarray):
    """Probability of class 1 (refactoring), clipped inside (0, 1).

    Accepts a single row or a 2-D matrix; returns a float or an array to
    match.
    """
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    proba = np.clip(sigmoid(predict_margin(model, arr)), _PROB_EPS, 1.0 - _PROB_EPS)
    return float(proba[0]) if single else proba


def predict_label(model: GbdtModel, x: np.ndarray):
    """Hard 0/1 call at the 0.5 threshold."""
    proba = predict_proba(model, x)
    if isinstance(proba, float):
        return int(proba >= 0.5)
    return (proba >= 0.5).astype(np.int8)


def sample_params(rng: np.random.Generator, space: dict, seed: int) -> GbdtParams:
    """Draw one configuration, consuming RNG state in the space's key order."""
    drawn = {}
    for name, spec in space.items():
        if isinstance(spec, tuple) and len(spec) == 3 and spec[0] == "log-uniform":
            lo, hi = math.log(spec[1]), math.log(spec[2])
            drawn[name] = float(math.exp(rng.uniform(lo, hi)))
        else:
            drawn[name] = spec[int(rng.integers(0, len(spec)))]
    return GbdtParams(seed=seed, **drawn)


def random_search(
    matrix: FeatureMatrix,
    space: dict = None,
    budget: int = 25,
    seed: int = 0,
):
    """Sample ``budget`` configurations; return (best params, validation AUC).

    All candidates are scored on one internal 80/20 split of the training
    matrix; ties keep the first-sampled configuration.
    """
    from .evaluation import rank_auc  # late import: evaluation drives this module

    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    if space is None:
        space = DEFAULT_SEARCH_SPACE

    rng = np.random.default_rng(seed)
    n = len(matrix)
    n_test = min(max(int(n * 0.2 + 1e-9), 1), n - 1)
    perm = rng.permutation(n)
    valid_m = matrix.subset(np.sort(perm[:n_test]))
    train_m = matrix.subset(np.sort(perm[n_test:]))
    valid_dense = valid_m.to_dense()
    valid_y = np.asarray(valid_m.labels)

    best_params = None
    best_auc = -np.inf
    for _ in range(budget):
        candidate = sample_params(rng, space, seed)
        fitted = train_gbdt(train_m, candidate)
        auc = rank_auc(valid_y, predict_proba(fitted, valid_dense))
        if auc > best_auc:
            best_auc = auc
            best_params = candidate
    return best_params, float(best_auc)


def write_model(path: str, model) -> None:
    from ._util import write_json

    write_json(path, model.to_json())


def read_model(path: str):
    """Load a serialized model, dispatching on the optional ``kind`` key."""
    from ._util import read_json

    obj = read_json(path, what="model file")
    kind = obj.get("kind", "gbdt")
    if kind == "gbdt":
        return GbdtModel.from_json(obj)
    from .baselines import BaselineModel

    if kind in BaselineModel.KINDS:
        return BaselineModel.from_json(obj)
    raise UnknownModelKind(f"unknown model kind {kind!r}")
