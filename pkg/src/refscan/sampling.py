"""NearMiss undersampling of the majority (non-refactoring) class.

Refactoring-labelled commits are a small minority of most histories, so a
classifier trained on the raw matrix mostly learns to say "no".  The three
NearMiss variants rebalance the training set by keeping every positive row
and only the most informative negatives:

* ``NM1`` keeps the negatives with the smallest mean distance to their
  ``k`` nearest positives.
* ``NM2`` keeps the negatives with the smallest mean distance to *all*
  positives.
* ``NM3`` keeps, for each positive, its ``m`` nearest negatives (union).

Distances are Euclidean over the dense schema-transformed row: the binary
term block concatenated with the min-max scaled numeric block.  Selection
is fully deterministic; ties are broken by original row index, ascending.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import pairwise_sqdist
from .errors import SingleClassInput
from .pipeline import FeatureMatrix

VARIANTS = ("NM1", "NM2", "NM3")


@dataclass(frozen=True)
class SamplerConfig:
    """Configuration for one undersampling run.

    ``k`` is the number of positives consulted per negative under NM1;
    ``m`` is the number of negatives kept per positive under NM3.  The
    unused knob is ignored by the other variants.
    """

    variant: str = "NM3"
    k: int = 3
    m: int = 3

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(
                f"unknown sampler variant {self.variant!r}; expected one of {VARIANTS}"
            )
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")


def _distance_table(dense: np.ndarray, neg_rows: np.ndarray, pos_rows: np.ndarray) -> np.ndarray:
    """Euclidean distances, shape (n_neg, n_pos)."""
    sq = pairwise_sqdist(
        np.ascontiguousarray(dense[neg_rows], dtype=np.float64),
        np.ascontiguousarray(dense[pos_rows], dtype=np.float64),
    )
    # Guard tiny negative round-off before the root.
    return np.sqrt(np.maximum(sq, 0.0))


def _smallest_mean(means: np.ndarray, n_keep: int) -> np.ndarray:
    """Positions of the ``n_keep`` smallest means, ties by position ascending."""
    order = np.lexsort((np.arange(means.shape[0]), means))
    return order[:n_keep]


def nearmiss(matrix: FeatureMatrix, config: SamplerConfig) -> np.ndarray:
    """Select row indices of ``matrix`` to keep: all positives plus negatives.

    Returns the kept row indices sorted ascending, so the subset preserves
    the original row order.  Raises :class:`SingleClassInput` when the
    matrix does not contain both classes.
    """
    labels = np.asarray(matrix.labels)
    pos_rows = np.flatnonzero(labels == 1)
    neg_rows = np.flatnonzero(labels == 0)
    if pos_rows.size == 0 or neg_rows.size == 0:
        raise SingleClassInput(
            "undersampling needs both classes; got "
            f"{pos_rows.size} positive and {neg_rows.size} negative rows"
        )

    if neg_rows.size <= pos_rows.size:
        # Already balanced or minority-negative: nothing to drop.
        return np.sort(np.concatenate([pos_rows, neg_rows]))

    dense = matrix.to_dense()
    dist = _distance_table(dense, neg_rows, pos_rows)

    if config.variant == "NM1":
        k = min(config.k, pos_rows.size)
        nearest = np.sort(dist, axis=1)[:, :k]
        chosen = _smallest_mean(nearest.mean(axis=1), pos_rows.size)
    elif config.variant == "NM2":
        chosen = _smallest_mean(dist.mean(axis=1), pos_rows.size)
    else:  # NM3
        m = min(config.m, neg_rows.size)
        keep = np.zeros(neg_rows.size, dtype=bool)
        positions = np.arange(neg_rows.size)
        for j in range(pos_rows.size):
            order = np.lexsort((positions, dist[:, j]))
            keep[order[:m]] = True
        chosen = np.flatnonzero(keep)

    return np.sort(np.concatenate([pos_rows, neg_rows[chosen]]))


def undersample(matrix: FeatureMatrix, config: SamplerConfig) -> FeatureMatrix:
    """Convenience wrapper: apply :func:`nearmiss` and materialise the subset."""
    return matrix.subset(nearmiss(matrix, config))


def variant_from_flag(flag: str) -> str:
    """Map a CLI sampler flag (``nearmiss1``..``nearmiss3``) to a variant name."""
    mapping = {"nearmiss1": "NM1", "nearmiss2": "NM2", "nearmiss3": "NM3"}
    try:
        return mapping[flag]
    except KeyError:
        raise ValueError(f"unknown sampler flag {flag!r}") from None
