# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops.

Every routine here has a numpy twin in ``_fallback`` that must return
bit-identical results; the order of floating-point operations is therefore
mirrored exactly (sequential subset sums, sequential accumulation over
subsets).
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def disc_counts(const cnp.uint8_t[:, ::1] canvas,
                const cnp.intp_t[:, ::1] points,
                const cnp.intp_t[:, ::1] offsets):
    """Number of foreground canvas cells under the disc at each point.

    ``points`` and ``offsets`` are (x, y) pairs; the canvas is indexed
    ``[y, x]`` and must be padded so that every probe is in range.
    """
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t m = offsets.shape[0]
    cdef Py_ssize_t i, j, x, y
    cdef cnp.int64_t acc
    out = np.zeros(n, dtype=np.int64)
    cdef cnp.int64_t[::1] res = out
    with nogil:
        for i in range(n):
            x = points[i, 0]
            y = points[i, 1]
            acc = 0
            for j in range(m):
                acc += canvas[y + offsets[j, 1], x + offsets[j, 0]] != 0
            res[i] = acc
    return out


def depth_kernel_matrix(const double[:, ::1] a,
                        const double[:, ::1] b,
                        const cnp.intp_t[::1] sub_idx,
                        const cnp.intp_t[::1] sub_ptr):
    """Subset-depth kernel between every row of ``a`` and every row of ``b``.

    Subsets are given in CSR form: subset ``s`` is
    ``sub_idx[sub_ptr[s]:sub_ptr[s + 1]]``.
    """
    cdef Py_ssize_t p = a.shape[0]
    cdef Py_ssize_t q = b.shape[0]
    cdef Py_ssize_t n = a.shape[1]
    cdef Py_ssize_t n_sub = sub_ptr.shape[0] - 1
    cdef Py_ssize_t i, j, k, s, lo, hi
    cdef double d, t, acc
    out = np.empty((p, q), dtype=np.float64)
    cdef double[:, ::1] res = out
    sq_buf = np.empty(n, dtype=np.float64)
    cdef double[::1] sq = sq_buf
    with nogil:
        for i in range(p):
            for j in range(q):
                for k in range(n):
                    d = a[i, k] - b[j, k]
                    sq[k] = d * d
                acc = 0.0
                for s in range(n_sub):
                    lo = sub_ptr[s]
                    hi = sub_ptr[s + 1]
                    t = sq[sub_idx[lo]]
                    for k in range(lo + 1, hi):
                        t = t + sq[sub_idx[k]]
                    acc = acc + sqrt(t)
                res[i, j] = acc
    return out


def group_sums(const cnp.int64_t[:, ::1] mat,
               const cnp.intp_t[:, ::1] groups,
               const cnp.int64_t[::1] rowsum):
    """Within-group block sum and row-sum total for each permuted group.

    Returns ``(within, rows)`` where ``within[r] = sum(mat[g, g])`` and
    ``rows[r] = sum(rowsum[g])`` for ``g = groups[r]``.
    """
    cdef Py_ssize_t s = groups.shape[0]
    cdef Py_ssize_t m = groups.shape[1]
    cdef Py_ssize_t r, i, j, gi
    cdef cnp.int64_t acc, racc
    within_arr = np.zeros(s, dtype=np.int64)
    rows_arr = np.zeros(s, dtype=np.int64)
    cdef cnp.int64_t[::1] within = within_arr
    cdef cnp.int64_t[::1] rows = rows_arr
    with nogil:
        for r in range(s):
            acc = 0
            racc = 0
            for i in range(m):
                gi = groups[r, i]
                racc += rowsum[gi]
                for j in range(m):
                    acc += mat[gi, groups[r, j]]
            within[r] = acc
            rows[r] = racc
    return within_arr, rows_arr
