"""N-distance estimators between two samples.

Scalars are compared with the Euclidean kernel ``|x - y|``; testing functions
sampled at ``n`` points with the subset-depth kernel, which sums the
Euclidean norms of the coordinate differences over every index subset of
size at most ``D``.
"""
from __future__ import annotations

import math
from functools import lru_cache
from itertools import combinations

import numpy as np

from . import _backend
from .errors import EmptySampleError, InvalidParameterError, ShapeError

DEFAULT_DEPTH = 2


def euclid_kernel(x: float, y: float) -> float:
    return abs(x - y)


@lru_cache(maxsize=None)
def index_subsets(n: int, depth: int) -> tuple[tuple[int, ...], ...]:
    """All index subsets of ``range(n)`` with 1..depth elements, by size then lexicographically."""
    if depth < 1 or depth > n:
        raise InvalidParameterError(f"depth must satisfy 1 <= D <= n={n}, got D={depth}")
    return tuple(c for m in range(1, depth + 1) for c in combinations(range(n), m))


@lru_cache(maxsize=None)
def _subset_csr(n, depth):
    subs = index_subsets(n, depth)
    idx = np.fromiter((k for s in subs for k in s), dtype=np.intp)
    ptr = np.zeros(len(subs) + 1, dtype=np.intp)
    ptr[1:] = np.cumsum([len(s) for s in subs])
    idx.setflags(write=False)
    ptr.setflags(write=False)
    return idx, ptr


def as_function_samples(ts) -> np.ndarray:
    """Stack testing functions (or plain sequences) into an ``(m, n)`` float array."""
    rows = [getattr(t, "values", t) for t in ts]
    if not rows:
        return np.zeros((0, 0))
    lengths = {len(r) for r in rows}
    if len(lengths) != 1:
        raise ShapeError(f"function samples have differing lengths {sorted(lengths)}")
    return np.ascontiguousarray(np.array(rows, dtype=np.float64))


def depth_kernel_matrix(a, b=None, depth: int = DEFAULT_DEPTH, kernels=None) -> np.ndarray:
    """Subset-depth kernel between all rows of ``a`` and ``b`` (``b`` defaults to ``a``)."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = a if b is None else np.ascontiguousarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ShapeError(f"function samples must share length, got {a.shape} and {b.shape}")
    idx, ptr = _subset_csr(a.shape[1], depth)
    k = kernels or _backend.kernels
    return k.depth_kernel_matrix(a, b, idx, ptr)


def depth_kernel(t1, t2, D: int = DEFAULT_DEPTH) -> float:
    t1 = np.asarray(getattr(t1, "values", t1), dtype=np.float64)
    t2 = np.asarray(getattr(t2, "values", t2), dtype=np.float64)
    if t1.shape != t2.shape or t1.ndim != 1:
        raise ShapeError(f"function samples must share length, got {t1.shape} and {t2.shape}")
    return float(depth_kernel_matrix(t1[None, :], t2[None, :], D)[0, 0])


def euclid_kernel_matrix(xs, ys=None) -> np.ndarray:
    xs = np.asarray(xs, dtype=np.float64)
    ys = xs if ys is None else np.asarray(ys, dtype=np.float64)
    return np.abs(xs[:, None] - ys[None, :])


def ndist_from_blocks(kxy, kxx, kyy) -> float:
    """Bilinear N-distance form from the three kernel blocks."""
    m1, m2 = kxy.shape
    return 2.0 * kxy.sum() / (m1 * m2) - kxx.sum() / (m1 * m1) - kyy.sum() / (m2 * m2)


def _check_nonempty(m1, m2):
    if m1 < 1 or m2 < 1:
        raise EmptySampleError(f"both samples must be non-empty (got sizes {m1} and {m2})")


def ndist_scalar(xs, ys) -> float:
    xs = np.asarray(xs, dtype=np.float64).ravel()
    ys = np.asarray(ys, dtype=np.float64).ravel()
    _check_nonempty(len(xs), len(ys))
    return float(ndist_from_blocks(euclid_kernel_matrix(xs, ys), euclid_kernel_matrix(xs), euclid_kernel_matrix(ys)))


def ndist_function(ts, us, D: int = DEFAULT_DEPTH) -> float:
    _check_nonempty(len(ts), len(us))
    a = as_function_samples(ts)
    b = as_function_samples(us)
    if a.shape[1] != b.shape[1]:
        raise ShapeError(f"function samples must share length, got {a.shape[1]} and {b.shape[1]}")
    return float(ndist_from_blocks(depth_kernel_matrix(a, b, D), depth_kernel_matrix(a, None, D),
                                   depth_kernel_matrix(b, None, D)))


def quantize(mat: np.ndarray, max_group: int | None = None) -> tuple[np.ndarray, float]:
    """Round a nonnegative kernel matrix onto an integer grid.

    Block sums of the result are exact and order-independent, which makes
    permutation statistics reproducible across backends and makes equal
    multisets tie exactly. The grid step ``1/scale`` is the largest power of
    two that keeps any sum of ``max_group**2`` entries below 2**62.
    """
    mat = np.asarray(mat, dtype=np.float64)
    n = max_group or mat.shape[0]
    top = float(mat.max(initial=0.0))
    if top <= 0.0:
        return np.zeros(mat.shape, dtype=np.int64), 1.0
    bits = min(40, math.floor(62 - math.log2(top) - 2 * math.log2(max(n, 1)) - 1))
    scale = math.ldexp(1.0, bits)
    return np.ascontiguousarray(np.rint(mat * scale).astype(np.int64)), scale


def kernel_matrix_csv(mat) -> str:
    return "\n".join(",".join(repr(float(v)) for v in row) for row in np.asarray(mat)) + "\n"
