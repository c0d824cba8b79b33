"""Pure-numpy implementations of the hot kernels.

Drop-in replacements for the compiled module.  Accumulation orders are chosen
to match the compiled loops exactly (bincount adds in element order; the
pairwise distance accumulates feature by feature), so both backends produce
bit-identical results.
"""

import numpy as np

NAME = "python"


def build_histograms(binned, rows, grad, hess, n_bins):
    """Per-feature gradient/hessian/count histograms over the given rows.

    binned: uint8 (n, d) C-contiguous; rows: int64 row indices (m,);
    grad/hess: float64 (n,).  Returns (hist_g, hist_h, hist_c) shaped
    (d, n_bins), accumulated row-major like the compiled loop.
    """
    d = binned.shape[1]
    sub = binned[rows].astype(np.intp, copy=False)
    flat = (sub + np.arange(d, dtype=np.intp) * n_bins).ravel()
    size = d * n_bins
    g = np.repeat(grad[rows], d)
    h = np.repeat(hess[rows], d)
    hist_g = np.bincount(flat, weights=g, minlength=size).reshape(d, n_bins)
    hist_h = np.bincount(flat, weights=h, minlength=size).reshape(d, n_bins)
    hist_c = np.bincount(flat, minlength=size).reshape(d, n_bins).astype(np.int64)
    return hist_g, hist_h, hist_c


def pairwise_sqdist(a, b):
    """Squared Euclidean distances, float64 (na, nb).

    Accumulates one feature at a time so the summation order matches the
    compiled kernel bit for bit.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    out = np.zeros((a.shape[0], b.shape[0]), dtype=np.float64)
    for k in range(a.shape[1]):
        diff = a[:, k, None] - b[None, :, k]
        out += diff * diff
    return out


def apply_tree(feat, thr, left, right, val, x):
    """Leaf values of one flattened tree for every row of x.

    feat[i] < 0 marks a leaf holding val[i]; internal nodes route rows with
    x[:, feat[i]] <= thr[i] to left[i], the rest to right[i].
    """
    n = x.shape[0]
    node = np.zeros(n, dtype=np.int64)
    live = feat[node] >= 0
    while live.any():
        idx = np.nonzero(live)[0]
        cur = node[idx]
        f = feat[cur]
        go_left = x[idx, f] <= thr[cur]
        node[idx] = np.where(go_left, left[cur], right[cur])
        live = feat[node] >= 0
    return val[node].astype(np.float64, copy=False)
