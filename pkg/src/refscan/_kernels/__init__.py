"""Kernel backend selection.

The compiled Cython module is preferred when present; the numpy fallback is
picked when it is missing or when REFSCAN_FORCE_PYTHON=1 is set.  Both
expose the same three functions and produce bit-identical results:

* build_histograms(binned, rows, grad, hess, n_bins)
* pairwise_sqdist(a, b)
* apply_tree(feat, thr, left, right, val, x)
"""

import os

from . import pyfallback

if os.environ.get("REFSCAN_FORCE_PYTHON", "") not in ("", "0"):
    backend = pyfallback
else:
    try:
        from . import _core as backend  # type: ignore[no-redef]
    except ImportError:
        backend = pyfallback

BACKEND = backend.NAME

build_histograms = backend.build_histograms
pairwise_sqdist = backend.pairwise_sqdist
apply_tree = backend.apply_tree


def available_backends():
    """All importable backends, compiled first."""
    out = []
    try:
        from . import _core
        out.append(_core)
    except ImportError:
        pass
    out.append(pyfallback)
    return out
