"""Time the numba kernels against their pure-numpy fallbacks.

Run ``python benchmarks/bench_kernels.py``. The first numba call (compilation
or cache load) is excluded; each number is the best of several repeats.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from blamelab import kernels as K


def cases(rng):
    a = rng.integers(0, 20, 120)
    b = rng.integers(0, 20, 120)
    n = 100
    parents = [int(rng.integers(0, i)) for i in range(1, n)]
    edges = np.array([(p, i + 1) for i, p in enumerate(parents)], dtype=np.int64)
    w = rng.random((n, n))
    dist = w + w.T
    gates = rng.normal(size=(32, 4 * 128)).astype(np.float32)
    c = rng.normal(size=(32, 128)).astype(np.float32)
    h = rng.normal(size=(32, 128)).astype(np.float32)
    mask = np.ones(32, dtype=np.int8)
    z = rng.normal(size=(80, 64))
    t = K.tree_distances_np(80, edges[:79]).astype(np.float64)
    return {
        "lcs_table (120x120)": ("lcs_table", (a, b)),
        "tree_distances (100 nodes)": ("tree_distances", (n, edges)),
        "prim_mst (100 nodes)": ("prim_mst", (dist,)),
        "lstm_pointwise (32x128)": ("lstm_pointwise", (gates, c, h, mask)),
        "probe_loss_grad (80 tokens, k=64)": ("probe_loss_grad", (z, t)),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':<36}{'numba ms':>10}{'numpy ms':>10}{'speedup':>9}")
    for label, (name, inputs) in cases(rng).items():
        nb, np_ = getattr(K, name + "_nb"), getattr(K, name + "_np")
        nb(*inputs)  # compile or load from cache
        times = []
        for fn in (nb, np_):
            timer = timeit.Timer(lambda: fn(*inputs))
            loops, _ = timer.autorange()
            times.append(min(timer.repeat(args.repeat, loops)) / loops * 1e3)
        print(f"{label:<36}{times[0]:>10.3f}{times[1]:>10.3f}{times[1] / times[0]:>8.1f}x")


if __name__ == "__main__":
    main()
