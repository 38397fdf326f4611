#!/usr/bin/env python3
"""Benchmark the compiled Jacobi kernel against the pure-numpy fallback.

Times full SVDs (sweeps + sorting + sign fixing) through the same pipeline
both backends share, then the end-to-end contrastive loss+gradient at a
typical training batch shape.

Usage: python3 benchmarks/bench_svd.py [--trials N]
"""

import argparse
import time

import numpy as np

from nucontrast import _jacobi_py, linalg
from nucontrast.contrast import contrastive_loss_and_gradient

try:
    from nucontrast import _jacobi
except ImportError:
    _jacobi = None

SHAPES = [(8, 4), (16, 8), (64, 16), (64, 32), (128, 64), (256, 64)]


def time_svd(kernel, matrices, repeats):
    start = time.perf_counter()
    for _ in range(repeats):
        for a in matrices:
            linalg._svd_impl(a, kernel)
    return (time.perf_counter() - start) / (repeats * len(matrices))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=20, help="matrices per shape")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    print(f"active backend: {linalg.kernel_backend()}")
    if _jacobi is None:
        print("compiled kernel not built; timing the python kernel only")

    header = f"{'shape':>10} {'python':>12} {'compiled':>12} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for shape in SHAPES:
        matrices = [np.ascontiguousarray(rng.normal(size=shape)) for _ in range(args.trials)]
        repeats = max(1, 200 // args.trials)
        t_py = time_svd(_jacobi_py, matrices, repeats)
        if _jacobi is not None:
            t_c = time_svd(_jacobi, matrices, repeats)
            print(
                f"{shape!s:>10} {t_py * 1e6:>10.1f}us {t_c * 1e6:>10.1f}us "
                f"{t_py / t_c:>8.1f}x"
            )
        else:
            print(f"{shape!s:>10} {t_py * 1e6:>10.1f}us {'-':>12} {'-':>9}")

    # end-to-end: loss + gradient on a training-sized batch
    z = rng.normal(size=(64, 16))
    labels = np.where(rng.random((64, 10)) < 0.4, 1, -1)
    for i in range(64):
        if not (labels[i] == 1).any():
            labels[i, 0] = 1
    start = time.perf_counter()
    for _ in range(50):
        contrastive_loss_and_gradient(z, labels)
    per_call = (time.perf_counter() - start) / 50
    print(
        f"\ncontrastive loss+gradient, batch 64x16 with 10 classes "
        f"({linalg.kernel_backend()} backend): {per_call * 1e3:.2f} ms"
    )


if __name__ == "__main__":
    main()
