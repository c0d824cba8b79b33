# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: histogram accumulation, pairwise squared distances,
tree traversal.  Mirrors refscan._kernels.pyfallback exactly (same shapes,
dtypes and floating-point accumulation order)."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

NAME = "compiled"


def build_histograms(const unsigned char[:, ::1] binned,
                     const cnp.int64_t[::1] rows,
                     const double[::1] grad,
                     const double[::1] hess,
                     int n_bins):
    cdef Py_ssize_t d = binned.shape[1]
    cdef Py_ssize_t m = rows.shape[0]
    hist_g = np.zeros((d, n_bins), dtype=np.float64)
    hist_h = np.zeros((d, n_bins), dtype=np.float64)
    hist_c = np.zeros((d, n_bins), dtype=np.int64)
    cdef double[:, ::1] hg = hist_g
    cdef double[:, ::1] hh = hist_h
    cdef cnp.int64_t[:, ::1] hc = hist_c
    cdef Py_ssize_t i, j
    cdef cnp.int64_t r
    cdef double g, h
    cdef unsigned char b
    with nogil:
        for i in range(m):
            r = rows[i]
            g = grad[r]
            h = hess[r]
            for j in range(d):
                b = binned[r, j]
                hg[j, b] += g
                hh[j, b] += h
                hc[j, b] += 1
    return hist_g, hist_h, hist_c


def pairwise_sqdist(object a_obj, object b_obj):
    a_arr = np.ascontiguousarray(a_obj, dtype=np.float64)
    b_arr = np.ascontiguousarray(b_obj, dtype=np.float64)
    cdef const double[:, ::1] a = a_arr
    cdef const double[:, ::1] b = b_arr
    cdef Py_ssize_t na = a.shape[0], nb = b.shape[0], d = a.shape[1]
    out = np.zeros((na, nb), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j, k
    cdef double av, diff
    # feature-outer accumulation matches the fallback's summation order
    with nogil:
        for k in range(d):
            for i in range(na):
                av = a[i, k]
                for j in range(nb):
                    diff = av - b[j, k]
                    o[i, j] += diff * diff
    return out


def apply_tree(const cnp.int32_t[::1] feat,
               const double[::1] thr,
               const cnp.int32_t[::1] left,
               const cnp.int32_t[::1] right,
               const double[::1] val,
               const double[:, ::1] x):
    cdef Py_ssize_t n = x.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    cdef cnp.int32_t node
    with nogil:
        for i in range(n):
            node = 0
            while feat[node] >= 0:
                if x[i, feat[node]] <= thr[node]:
                    node = left[node]
                else:
                    node = right[node]
            o[i] = val[node]
    return out
