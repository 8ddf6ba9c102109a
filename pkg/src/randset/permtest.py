"""Monte Carlo permutation tests on component descriptors.

The joint test relabels the pooled descriptors ``s`` times and recomputes
both N-distances (perimeter/area ratios and testing functions) under the
same relabeling; the joint p-value counts rounds in which both permuted
statistics reach their observed values.

Kernel matrices are built once per test and quantized to integers, so each
permutation only re-sums blocks of a cached matrix, and the sums are exact.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from . import _backend
from .descriptors import DEFAULT_BINS, DEFAULT_RADIUS
from .errors import (EmptySampleError, InsufficientDataError, InvalidParameterError, PoolTooSmallError,
                     ShapeError, TooFewComponentsError)
from .ndist import (DEFAULT_DEPTH, as_function_samples, depth_kernel_matrix, euclid_kernel_matrix,
                    ndist_from_blocks, quantize)

log = logging.getLogger(__name__)

DEFAULT_PERMUTATIONS = 999
ALPHA = 0.05

# Stream tags for derived RNG streams: (master seed, tag, index...)
_SAMPLE_STREAM = 1
_TEST_STREAM = 2


def rng_stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for stream ``key`` under master ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))))


def derive_seed(seed: int, *key: int) -> int:
    """64-bit integer seed for sub-task ``key`` (e.g. realisation ``i``) under master ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class PermutationConfig:
    s: int = DEFAULT_PERMUTATIONS
    seed: int = 0
    depth: int = DEFAULT_DEPTH
    bins: int = DEFAULT_BINS
    radius: int = DEFAULT_RADIUS

    def __post_init__(self):
        if self.s < 1:
            raise InvalidParameterError(f"number of permutations must be >= 1, got {self.s}")
        if not 0 <= self.seed < 2**64:
            raise InvalidParameterError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.s < 19:
            log.warning("s=%d permutations cannot resolve p < 0.05", self.s)


@dataclass(frozen=True)
class TestOutcome:
    __test__ = False

    n_ratio_obs: float
    n_curve_obs: float
    p_ratio: float
    p_curve: float
    p_joint: float
    s_used: int
    exceed_ratio: int = field(default=0, repr=False)
    exceed_curve: int = field(default=0, repr=False)
    exceed_joint: int = field(default=0, repr=False)


def permutation_pvalue(stats_obs: float, stats_perm) -> float:
    perm = np.asarray(stats_perm, dtype=float).ravel()
    if perm.size == 0:
        raise EmptySampleError("no permuted statistics given")
    return (int(np.count_nonzero(perm >= stats_obs)) + 1) / (perm.size + 1)


def random_groups(n_total: int, m1: int, s: int, rng: np.random.Generator) -> np.ndarray:
    """First-group indices of ``s`` uniform relabelings, each row sorted ascending."""
    perms = rng.permuted(np.tile(np.arange(n_total, dtype=np.intp), (s, 1)), axis=1)
    return np.ascontiguousarray(np.sort(perms[:, :m1], axis=1))


def permuted_ndist(qmat: np.ndarray, groups: np.ndarray, m1: int, kernels=None) -> np.ndarray:
    """N-distance (in quantized units) for every row of ``groups`` against its complement."""
    k = kernels or _backend.kernels
    n_total = qmat.shape[0]
    m2 = n_total - m1
    rowsum = qmat.sum(axis=1)
    total = int(rowsum.sum())
    within, rows = k.group_sums(qmat, groups, rowsum)
    sxx = within
    sxy = rows - within
    syy = total - 2 * rows + within
    return (2.0 * sxy.astype(np.float64) / (m1 * m2)
            - sxx.astype(np.float64) / (m1 * m1)
            - syy.astype(np.float64) / (m2 * m2))


def _check_descriptors(dx, dy):
    if len(dx) < 2 or len(dy) < 2:
        raise TooFewComponentsError(f"each sample needs at least 2 components, got {len(dx)} and {len(dy)}")
    bins = {d.curve.bins for d in dx} | {d.curve.bins for d in dy}
    if len(bins) != 1:
        raise ShapeError(f"testing functions use differing bin counts {sorted(bins)}")


def joint_similarity_test(dx, dy, cfg: PermutationConfig = PermutationConfig(), stream=(), kernels=None) -> TestOutcome:
    """Joint permutation test of two descriptor samples.

    ``stream`` selects the derived RNG stream under ``cfg.seed``; callers
    running many tests under one master seed give each test its own key.
    """
    _check_descriptors(dx, dy)
    m1, m2 = len(dx), len(dy)
    ratios = np.array([d.ratio for d in dx] + [d.ratio for d in dy], dtype=np.float64)
    curves = as_function_samples([d.curve for d in dx] + [d.curve for d in dy])
    kr = euclid_kernel_matrix(ratios)
    kt = depth_kernel_matrix(curves, None, cfg.depth, kernels=kernels)
    n_ratio = float(ndist_from_blocks(kr[:m1, m1:], kr[:m1, :m1], kr[m1:, m1:]))
    n_curve = float(ndist_from_blocks(kt[:m1, m1:], kt[:m1, :m1], kt[m1:, m1:]))

    rng = rng_stream(cfg.seed, _TEST_STREAM, *stream)
    groups = np.vstack([np.arange(m1, dtype=np.intp)[None, :], random_groups(m1 + m2, m1, cfg.s, rng)])
    stat_r = permuted_ndist(quantize(kr)[0], groups, m1, kernels)
    stat_t = permuted_ndist(quantize(kt)[0], groups, m1, kernels)
    hit_r = stat_r[1:] >= stat_r[0]
    hit_t = stat_t[1:] >= stat_t[0]
    cr, ct, cj = int(hit_r.sum()), int(hit_t.sum()), int((hit_r & hit_t).sum())
    denom = cfg.s + 1
    return TestOutcome(n_ratio, n_curve, (cr + 1) / denom, (ct + 1) / denom, (cj + 1) / denom, cfg.s, cr, ct, cj)


def sample_indices(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    if n == 0:
        raise EmptySampleError("cannot sample from an empty collection")
    if k < 1:
        raise InvalidParameterError(f"sample size must be >= 1, got {k}")
    if k >= n:
        return np.arange(n)
    return np.sort(rng.choice(n, size=k, replace=False))


def sample_components(comps, k: int, seed) -> list:
    """Uniform sample of ``min(k, len(comps))`` items without replacement, in input order.

    ``seed`` is an int or a ``numpy.random.Generator``.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    items = list(comps)
    return [items[i] for i in sample_indices(len(items), k, rng)]


def _map(fn, items, workers):
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def _bootstrap_repeat(rep, pool_x, pool_y, k, cfg):
    rng = rng_stream(cfg.seed, _SAMPLE_STREAM, rep)
    sx = [pool_x[i] for i in sample_indices(len(pool_x), k, rng)]
    sy = [pool_y[i] for i in sample_indices(len(pool_y), k, rng)]
    return joint_similarity_test(sx, sy, cfg, stream=(rep,))


def bootstrap_outcomes(pool_x, pool_y, k: int = 100, repeats: int = 100, cfg: PermutationConfig = PermutationConfig(),
                       workers: int = 1) -> list[TestOutcome]:
    """Repeated joint tests on fresh ``k``-vs-``k`` draws from two descriptor pools."""
    for name, pool in (("X", pool_x), ("Y", pool_y)):
        if len(pool) < k:
            raise PoolTooSmallError(name, len(pool), k)
    if repeats < 1:
        raise InvalidParameterError(f"repeats must be >= 1, got {repeats}")
    fn = partial(_bootstrap_repeat, pool_x=list(pool_x), pool_y=list(pool_y), k=k, cfg=cfg)
    return _map(fn, range(repeats), workers)


def bootstrap_pooled_test(pool_x, pool_y, k: int = 100, repeats: int = 100,
                          cfg: PermutationConfig = PermutationConfig(), workers: int = 1) -> list[float]:
    return [o.p_joint for o in bootstrap_outcomes(pool_x, pool_y, k, repeats, cfg, workers)]


@dataclass
class MatrixResult:
    """Upper-triangular pairwise results; entries below the diagonal are unused."""

    labels: list[str]
    mean_p: np.ndarray
    count_below: np.ndarray
    repeats: int

    def cells(self):
        n = len(self.labels)
        return [(i, j) for i in range(n) for j in range(i, n)]


def _matrix_cell(cell, sets, k, repeats, cfg):
    i, j = cell
    pvals = []
    for rep in range(repeats):
        rng = rng_stream(cfg.seed, _SAMPLE_STREAM, i, j, rep)
        sx = [sets[i][t] for t in sample_indices(len(sets[i]), k, rng)]
        sy = [sets[j][t] for t in sample_indices(len(sets[j]), k, rng)]
        pvals.append(joint_similarity_test(sx, sy, cfg, stream=(i, j, rep)).p_joint)
    return pvals


def pairwise_matrix(descriptor_sets, k: int = 20, repeats: int = 100, cfg: PermutationConfig = PermutationConfig(),
                    labels=None, workers: int = 1) -> MatrixResult:
    """Mean joint p-value and count of p < 0.05 for every image pair, self-pairs included.

    ``descriptor_sets`` holds the (filtered) component descriptors of each
    image. Each repeat draws fresh ``k``-samples, independently for both
    sides even on the diagonal.
    """
    sets = [list(s) for s in descriptor_sets]
    n = len(sets)
    if n < 2:
        raise InsufficientDataError(f"pairwise matrix needs at least 2 images, got {n}")
    labels = list(labels) if labels is not None else [f"img{i + 1}" for i in range(n)]
    for lab, s in zip(labels, sets):
        if len(s) < 2:
            raise TooFewComponentsError(f"image {lab!r} has {len(s)} components, need at least 2")
        if len(s) < k:
            log.warning("image %r has only %d components; sampling all of them instead of k=%d", lab, len(s), k)
    mean_p = np.full((n, n), np.nan)
    count = np.zeros((n, n), dtype=np.int64)
    result = MatrixResult(labels, mean_p, count, repeats)
    cells = result.cells()
    fn = partial(_matrix_cell, sets=sets, k=k, repeats=repeats, cfg=cfg)
    for (i, j), pvals in zip(cells, _map(fn, cells, workers)):
        arr = np.asarray(pvals)
        mean_p[i, j] = arr.mean()
        count[i, j] = int(np.count_nonzero(arr < ALPHA))
    return result


def matrix_csv(result: MatrixResult, which: str = "mean_p") -> str:
    """Upper-triangular table with a header row of labels (blank below the diagonal)."""
    table = result.mean_p if which == "mean_p" else result.count_below
    lines = ["," + ",".join(result.labels)]
    n = len(result.labels)
    for i in range(n):
        row = [result.labels[i]]
        for j in range(n):
            if j < i:
                row.append("")
            elif which == "mean_p":
                row.append(repr(float(table[i, j])))
            else:
                row.append(str(int(table[i, j])))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def pvalues_csv(pvals, header="p") -> str:
    return header + "\n" + "".join(f"{float(p)!r}\n" for p in pvals)


OUTCOME_COLUMNS = ("index", "n_ratio", "n_curve", "p_ratio", "p_curve", "p_joint")


def outcomes_csv(outcomes) -> str:
    lines = [",".join(OUTCOME_COLUMNS)]
    for i, o in enumerate(outcomes):
        lines.append(",".join([str(i)] + [repr(float(v)) for v in
                                          (o.n_ratio_obs, o.n_curve_obs, o.p_ratio, o.p_curve, o.p_joint)]))
    return "\n".join(lines) + "\n"
