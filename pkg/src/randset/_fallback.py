"""Pure-numpy versions of the compiled kernels in ``_kernels.pyx``.

Results match the compiled versions bit for bit: float reductions follow the
same sequential order and the permutation sums are exact integer arithmetic.
"""
import numpy as np

# Bound on the temporary (chunk, m, m) int64 block in group_sums.
_CHUNK_ELEMS = 1 << 22


def disc_counts(canvas, points, offsets):
    counts = np.zeros(len(points), dtype=np.int64)
    if len(points) == 0:
        return counts
    xs = points[:, 0]
    ys = points[:, 1]
    fg = canvas != 0
    for dx, dy in offsets:
        counts += fg[ys + dy, xs + dx]
    return counts


def depth_kernel_matrix(a, b, sub_idx, sub_ptr):
    diff = a[:, None, :] - b[None, :, :]
    sq = diff * diff
    acc = np.zeros((a.shape[0], b.shape[0]), dtype=np.float64)
    for s in range(len(sub_ptr) - 1):
        idx = sub_idx[sub_ptr[s]:sub_ptr[s + 1]]
        t = sq[:, :, idx[0]]
        for k in idx[1:]:
            t = t + sq[:, :, k]
        acc = acc + np.sqrt(t)
    return acc


def group_sums(mat, groups, rowsum):
    s, m = groups.shape
    within = np.empty(s, dtype=np.int64)
    rows = rowsum[groups].sum(axis=1)
    step = max(1, _CHUNK_ELEMS // max(1, m * m))
    for lo in range(0, s, step):
        g = groups[lo:lo + step]
        within[lo:lo + step] = mat[g[:, :, None], g[:, None, :]].sum(axis=(1, 2))
    return within, rows
