"""Builders for synthetic schemas, matrices and feature rows used in tests."""

import numpy as np

from refscan.features import NUMERIC_COLUMNS, FeatureRow
from refscan.pipeline import FeatureMatrix, FeatureSchema


def numeric_schema(n_numeric: int, n_terms: int = 0) -> FeatureSchema:
    """Schema with generic column names and identity scaling bounds."""
    return FeatureSchema(
        vocabulary=tuple(f"t{i}" for i in range(n_terms)),
        numeric_columns=tuple(f"c{j}" for j in range(n_numeric)),
        dropped={},
        minmax={f"c{j}": (0.0, 1.0) for j in range(n_numeric)},
    )


def make_matrix(
    n: int,
    d: int,
    seed: int = 0,
    label_rule=None,
    pos_ratio: float = 0.3,
    n_terms: int = 0,
    term_prob: float = 0.0,
    schema: FeatureSchema | None = None,
) -> FeatureMatrix:
    """Random FeatureMatrix: ``d`` uniform numeric columns, optional random
    binary terms, labels from ``label_rule(numeric)`` or a positive ratio."""
    rng = np.random.default_rng(seed)
    numeric = rng.random((n, d))
    if label_rule is not None:
        labels = np.asarray(label_rule(numeric), dtype=np.int8)
    else:
        labels = np.zeros(n, dtype=np.int8)
        labels[rng.permutation(n)[: max(1, int(n * pos_ratio))]] = 1
    text_indices: list[list[int]] = []
    for _ in range(n):
        if n_terms and term_prob > 0.0:
            mask = rng.random(n_terms) < term_prob
            text_indices.append([int(i) for i in np.flatnonzero(mask)])
        else:
            text_indices.append([])
    return FeatureMatrix(
        shas=[f"sha{i:05d}" for i in range(n)],
        projects=["proj"] * n,
        labels=labels,
        text_indices=text_indices,
        numeric=numeric,
        schema=schema or numeric_schema(d, n_terms),
    )


def make_feature_rows(
    n: int,
    seed: int = 0,
    overrides: dict | None = None,
    term_sets: list | None = None,
    labels=None,
    projects=None,
) -> list[FeatureRow]:
    """Raw feature rows with every declared numeric column filled randomly.

    ``overrides`` maps a column name to an array of ``n`` planted values;
    ``term_sets``/``labels``/``projects`` are per-row when given.
    """
    rng = np.random.default_rng(seed)
    base = {name: rng.random(n) for name in NUMERIC_COLUMNS}
    if overrides:
        for name, values in overrides.items():
            if name not in base:
                raise KeyError(f"unknown numeric column {name!r}")
            base[name] = np.asarray(values, dtype=np.float64)
    rows = []
    for i in range(n):
        rows.append(
            FeatureRow(
                sha=f"sha{i:05d}",
                project=projects[i] if projects is not None else "proj",
                label=bool(labels[i]) if labels is not None else (i % 3 == 0),
                terms=tuple(term_sets[i]) if term_sets is not None else (),
                numeric={name: float(base[name][i]) for name in NUMERIC_COLUMNS},
            )
        )
    return rows
