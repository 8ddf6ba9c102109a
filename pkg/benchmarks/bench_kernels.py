"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Each row runs the same inputs through both backends, checks that the
results agree bit for bit, and reports the best-of-N wall time.
"""
import argparse
import timeit

import numpy as np

from randset import _backend
from randset.descriptors import disc_mask, describe_image
from randset.imagery import label_components
from randset.models import simulate_boolean
from randset.ndist import _subset_csr, quantize
from randset.permtest import PermutationConfig, joint_similarity_test, random_groups


def cases(rng):
    img = simulate_boolean(seed=1)
    canvas = np.pad(img.mask.view(np.uint8), 5)
    points = np.ascontiguousarray(np.vstack([c.boundary for c in label_components(img)]) + 5, dtype=np.intp)
    offsets = disc_mask(5).offsets
    yield "disc_counts (r=5, %d pts)" % len(points), "disc_counts", (canvas, points, offsets)

    curves = rng.random((200, 10))
    idx, ptr = _subset_csr(10, 2)
    yield "depth_kernel_matrix (200x200, n=10, D=2)", "depth_kernel_matrix", (curves, curves, idx, ptr)

    q, _ = quantize(rng.random((200, 200)))
    q = np.ascontiguousarray(q + q.T)
    groups = random_groups(200, 100, 999, rng)
    yield "group_sums (m=100+100, s=999)", "group_sums", (q, groups, q.sum(axis=1))


def bench_pipeline(kernels, repeat):
    descs = describe_image(simulate_boolean(seed=2), r=5)
    half = len(descs) // 2
    cfg = PermutationConfig(s=999, seed=0)
    fn = lambda: joint_similarity_test(descs[:half], descs[half:], cfg, kernels=kernels)
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    try:
        cy = _backend.get_kernels("cython")
    except ImportError:
        raise SystemExit("compiled extension not built; run `pip install --no-build-isolation -e .` first")
    py = _backend.get_kernels("python")
    rng = np.random.default_rng(0)
    print(f"{'kernel':44s} {'cython ms':>10s} {'python ms':>10s} {'speedup':>8s}")
    for label, name, inputs in cases(rng):
        a, b = getattr(cy, name)(*inputs), getattr(py, name)(*inputs)
        same = all(np.array_equal(x, y) for x, y in zip(a, b)) if isinstance(a, tuple) else a.tobytes() == b.tobytes()
        if not same:
            raise SystemExit(f"backends disagree on {name}")
        tc = min(timeit.repeat(lambda: getattr(cy, name)(*inputs), number=1, repeat=args.repeat))
        tp = min(timeit.repeat(lambda: getattr(py, name)(*inputs), number=1, repeat=args.repeat))
        print(f"{label:44s} {tc * 1e3:10.2f} {tp * 1e3:10.2f} {tp / tc:7.1f}x")
    tc, tp = bench_pipeline(cy, args.repeat), bench_pipeline(py, args.repeat)
    print(f"{'joint_similarity_test (one realisation split)':44s} {tc * 1e3:10.2f} {tp * 1e3:10.2f} {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
