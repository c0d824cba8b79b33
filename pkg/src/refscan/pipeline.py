"""Preprocessing pipeline: vocabulary selection, numeric pruning, scaling.

Fitted on training rows only, then applied to any rows:

1. keep n-gram terms whose binary-presence variance p(1-p) is at least the
   variance threshold;
2. drop constant numeric columns;
3. Spearman pruning over the process+code columns: scanning pairs in declared
   column order, the later column of any pair with \\|rho\\| above the threshold
   is dropped (message scalars are textual features and are never pruned);
4. iterative redundancy pruning: regress each remaining prunable column on
   the others (with intercept) and drop the worst column while its R^2
   exceeds the threshold (ties pick the later column);
5. min-max scaling of every retained numeric column to [0, 1], clamped at
   transform time; columns constant at fit time map to 0.

Textual features become sorted vocabulary indices (binary presence).
"""

import sys
from dataclasses import dataclass, field

import numpy as np

from ._util import read_json, read_jsonl, sha256_of, write_json, write_jsonl
from .errors import DegenerateInput, EmptyTraining, LengthMismatch, SchemaMismatch
from .features import NUMERIC_COLUMNS, UNPRUNED_COLUMNS, FeatureRow

SCHEMA_VERSION = 1

DEFAULT_VARIANCE_THRESHOLD = 0.001
DEFAULT_SPEARMAN_THRESHOLD = 0.7
DEFAULT_R2_THRESHOLD = 0.9


# --- rank correlation -------------------------------------------------------


def _average_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    n = len(values)
    while i < n:
        j = i
        while j + 1 < n and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman_rho(x, y) -> float:
    """Spearman rank correlation with average ranks for ties."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch("spearman_rho needs two equal-length vectors")
    if len(x) < 2:
        raise DegenerateInput("spearman_rho needs at least two observations")
    rx = _average_ranks(x)
    ry = _average_ranks(y)
    sx = rx - rx.mean()
    sy = ry - ry.mean()
    denom = np.sqrt((sx * sx).sum() * (sy * sy).sum())
    if denom == 0.0:
        return 0.0  # a constant vector has no rank ordering
    return float((sx * sy).sum() / denom)


def spearman_prune(matrix: np.ndarray, names: list[str], threshold: float) -> tuple[list[str], list[str]]:
    """Greedy correlation pruning in declared column order.

    For every pair (i, j) with i before j and \\|rho\\| > threshold, column j is
    dropped.  Returns (kept, dropped) in declared order.
    """
    if matrix.shape[0] < 2:
        raise DegenerateInput("spearman_prune needs at least two rows")
    n_cols = matrix.shape[1]
    dropped = np.zeros(n_cols, dtype=bool)
    ranks = [_average_ranks(matrix[:, j]) for j in range(n_cols)]
    for i in range(n_cols):
        if dropped[i]:
            continue
        for j in range(i + 1, n_cols):
            if dropped[j]:
                continue
            sx = ranks[i] - ranks[i].mean()
            sy = ranks[j] - ranks[j].mean()
            denom = np.sqrt((sx * sx).sum() * (sy * sy).sum())
            rho = 0.0 if denom == 0.0 else float((sx * sy).sum() / denom)
            if abs(rho) > threshold:
                dropped[j] = True
    kept = [names[k] for k in range(n_cols) if not dropped[k]]
    gone = [names[k] for k in range(n_cols) if dropped[k]]
    return kept, gone


def _r2_against_others(matrix: np.ndarray, j: int) -> float:
    y = matrix[:, j]
    others = np.delete(matrix, j, axis=1)
    design = np.column_stack([others, np.ones(len(y))])
    beta, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ beta
    sst = ((y - y.mean()) ** 2).sum()
    if sst <= 0.0:
        return 0.0
    return float(1.0 - (resid * resid).sum() / sst)


def redundancy_prune(matrix: np.ndarray, names: list[str], threshold: float) -> tuple[list[str], list[str]]:
    """Iteratively drop the column best predicted by the others (R^2 above
    threshold, ties pick the later column)."""
    names = list(names)
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape[0] <= matrix.shape[1]:
        print(
            f"warning: redundancy pruning skipped ({matrix.shape[0]} rows <= "
            f"{matrix.shape[1]} columns)",
            file=sys.stderr,
        )
        return names, []
    gone = []
    while matrix.shape[1] >= 2:
        scores = [_r2_against_others(matrix, j) for j in range(matrix.shape[1])]
        worst = max(range(len(scores)), key=lambda j: (scores[j], j))
        if scores[worst] <= threshold:
            break
        gone.append(names[worst])
        names.pop(worst)
        matrix = np.delete(matrix, worst, axis=1)
    return names, gone


# --- schema ------------------------------------------------------------------


@dataclass(frozen=True)
class FeatureSchema:
    vocabulary: tuple[str, ...]
    numeric_columns: tuple[str, ...]
    dropped: dict[str, list[str]]
    minmax: dict[str, tuple[float, float]]
    version: int = SCHEMA_VERSION

    def feature_names(self) -> list[str]:
        return [f"term:{t}" for t in self.vocabulary] + list(self.numeric_columns)

    @property
    def width(self) -> int:
        return len(self.vocabulary) + len(self.numeric_columns)

    def content_hash(self) -> str:
        return sha256_of(
            {
                "vocabulary": list(self.vocabulary),
                "numeric": list(self.numeric_columns),
                "minmax": {k: list(v) for k, v in self.minmax.items()},
            }
        )

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "vocabulary": list(self.vocabulary),
            "numeric": list(self.numeric_columns),
            "dropped": {k: list(v) for k, v in sorted(self.dropped.items())},
            "minmax": {k: list(self.minmax[k]) for k in self.numeric_columns},
        }

    @staticmethod
    def from_json(obj) -> "FeatureSchema":
        return FeatureSchema(
            version=int(obj.get("version", SCHEMA_VERSION)),
            vocabulary=tuple(obj["vocabulary"]),
            numeric_columns=tuple(obj["numeric"]),
            dropped={k: list(v) for k, v in obj.get("dropped", {}).items()},
            minmax={k: (float(v[0]), float(v[1])) for k, v in obj["minmax"].items()},
        )


def _numeric_matrix(rows: list[FeatureRow], columns) -> np.ndarray:
    out = np.empty((len(rows), len(columns)), dtype=np.float64)
    for i, row in enumerate(rows):
        for j, name in enumerate(columns):
            if name not in row.numeric:
                raise SchemaMismatch(f"row {row.sha}: missing numeric column {name!r}")
            out[i, j] = row.numeric[name]
    return out


def fit_schema(
    rows: list[FeatureRow],
    variance_threshold: float = DEFAULT_VARIANCE_THRESHOLD,
    spearman_threshold: float = DEFAULT_SPEARMAN_THRESHOLD,
    r2_threshold: float = DEFAULT_R2_THRESHOLD,
) -> FeatureSchema:
    """Fit vocabulary, pruning and scaling on training rows only."""
    if not rows:
        raise EmptyTraining("fit_schema needs at least one training row")
    n = len(rows)
    dropped: dict[str, list[str]] = {"low_variance": [], "correlated": [], "redundant": []}

    # 1. vocabulary by binary-presence variance
    presence: dict[str, int] = {}
    for row in rows:
        for term in set(row.terms):
            presence[term] = presence.get(term, 0) + 1
    vocabulary = []
    for term in sorted(presence):
        p = presence[term] / n
        if p * (1.0 - p) >= variance_threshold:
            vocabulary.append(term)
        else:
            dropped["low_variance"].append(f"term:{term}")

    # 2. constant numeric columns
    matrix = _numeric_matrix(rows, NUMERIC_COLUMNS)
    kept = []
    for j, name in enumerate(NUMERIC_COLUMNS):
        col = matrix[:, j]
        if col.max() == col.min():
            dropped["low_variance"].append(name)
        else:
            kept.append(name)

    # 3./4. correlation and redundancy pruning of process+code columns
    prunable = [name for name in kept if name not in UNPRUNED_COLUMNS]
    exempt = [name for name in kept if name in UNPRUNED_COLUMNS]
    if len(prunable) >= 2 and n >= 2:
        sub = _numeric_matrix(rows, prunable)
        prunable, correlated = spearman_prune(sub, prunable, spearman_threshold)
        dropped["correlated"] = correlated
        sub = _numeric_matrix(rows, prunable)
        prunable, redundant = redundancy_prune(sub, prunable, r2_threshold)
        dropped["redundant"] = redundant
    numeric_columns = [name for name in kept if name in set(exempt) | set(prunable)]

    # 5. min-max bounds
    minmax = {}
    for name in numeric_columns:
        col = _numeric_matrix(rows, [name])[:, 0]
        minmax[name] = (float(col.min()), float(col.max()))

    return FeatureSchema(
        vocabulary=tuple(vocabulary),
        numeric_columns=tuple(numeric_columns),
        dropped=dropped,
        minmax=minmax,
    )


# --- transform ----------------------------------------------------------------


@dataclass
class FeatureMatrix:
    """Transformed rows: sparse binary textual indices plus scaled numerics."""

    shas: list[str]
    projects: list[str]
    labels: np.ndarray  # int8 (n,)
    text_indices: list[list[int]]
    numeric: np.ndarray  # float64 (n, len(numeric_columns))
    schema: FeatureSchema = field(repr=False)

    def __len__(self):
        return len(self.shas)

    @property
    def width(self) -> int:
        return self.schema.width

    def to_dense(self) -> np.ndarray:
        """Dense (n, width) float64: binary textual block then numeric block."""
        n = len(self.shas)
        v = len(self.schema.vocabulary)
        out = np.zeros((n, self.schema.width), dtype=np.float64)
        for i, idxs in enumerate(self.text_indices):
            if idxs:
                out[i, idxs] = 1.0
        out[:, v:] = self.numeric
        return out

    def subset(self, indices) -> "FeatureMatrix":
        indices = list(indices)
        return FeatureMatrix(
            shas=[self.shas[i] for i in indices],
            projects=[self.projects[i] for i in indices],
            labels=self.labels[indices],
            text_indices=[self.text_indices[i] for i in indices],
            numeric=self.numeric[indices],
            schema=self.schema,
        )


def transform(rows: list[FeatureRow], schema: FeatureSchema) -> FeatureMatrix:
    """Apply a fitted schema; never learns anything from the rows."""
    vocab_index = {t: i for i, t in enumerate(schema.vocabulary)}
    text_indices = []
    for row in rows:
        idxs = sorted(vocab_index[t] for t in set(row.terms) if t in vocab_index)
        text_indices.append(idxs)

    numeric = _numeric_matrix(rows, schema.numeric_columns)
    for j, name in enumerate(schema.numeric_columns):
        lo, hi = schema.minmax[name]
        if hi == lo:
            numeric[:, j] = 0.0
        else:
            numeric[:, j] = np.clip((numeric[:, j] - lo) / (hi - lo), 0.0, 1.0)

    return FeatureMatrix(
        shas=[r.sha for r in rows],
        projects=[r.project for r in rows],
        labels=np.array([int(r.label) for r in rows], dtype=np.int8),
        text_indices=text_indices,
        numeric=numeric,
        schema=schema,
    )


# --- file formats -------------------------------------------------------------


def write_schema(path, schema: FeatureSchema, provenance: dict | None = None):
    obj = schema.to_json()
    if provenance:
        obj["provenance"] = provenance
    write_json(path, obj)


def read_schema(path) -> FeatureSchema:
    return FeatureSchema.from_json(read_json(path, what="schema"))


def write_dataset(path, matrix: FeatureMatrix):
    rows = (
        {
            "sha": matrix.shas[i],
            "project": matrix.projects[i],
            "label": int(matrix.labels[i]),
            "text": list(matrix.text_indices[i]),
            "num": [float(x) for x in matrix.numeric[i]],
        }
        for i in range(len(matrix))
    )
    write_jsonl(path, rows)


def read_dataset(path, schema: FeatureSchema) -> FeatureMatrix:
    objs = read_jsonl(path, what="dataset")
    n = len(objs)
    numeric = np.zeros((n, len(schema.numeric_columns)), dtype=np.float64)
    shas, projects, text_indices = [], [], []
    labels = np.zeros(n, dtype=np.int8)
    for i, obj in enumerate(objs):
        shas.append(obj["sha"])
        projects.append(obj["project"])
        labels[i] = int(obj["label"])
        idxs = [int(t) for t in obj["text"]]
        if idxs and (min(idxs) < 0 or max(idxs) >= len(schema.vocabulary)):
            raise SchemaMismatch(f"dataset row {obj['sha']}: term index out of range")
        text_indices.append(idxs)
        num = obj["num"]
        if len(num) != len(schema.numeric_columns):
            raise SchemaMismatch(
                f"dataset row {obj['sha']}: {len(num)} numeric values, "
                f"schema has {len(schema.numeric_columns)}"
            )
        numeric[i] = num
    return FeatureMatrix(
        shas=shas,
        projects=projects,
        labels=labels,
        text_indices=text_indices,
        numeric=numeric,
        schema=schema,
    )
