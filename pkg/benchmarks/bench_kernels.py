"""Compare the numba and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--profiles 60] [--length 128] [--repeat 3]

Reports the best-of-``repeat`` wall time of a full pairwise DTW matrix, one
DBA update over all profiles, and a 3-cluster DTW K-means fit. Numba compile
time is measured separately on a tiny input and excluded from the timings.
"""

import argparse
import time

import numpy as np

from meltline import kernels
from meltline._accel import NUMBA_AVAILABLE
from meltline.cluster import fit_kmeans
from meltline.synth import template_profiles


def best_of(repeat, fn):
    times = []
    result = None
    for _ in range(repeat):
        t = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t)
    return min(times), result


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--profiles", type=int, default=60)
    ap.add_argument("--length", type=int, default=128)
    ap.add_argument("--band", type=int, default=None)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    X, _ = template_profiles(args.profiles // 3, args.length, 0.01, seed=0)
    impls = ["numpy"] + (["numba"] if NUMBA_AVAILABLE else [])

    if NUMBA_AVAILABLE:
        tiny = X[:2, :8]
        t = time.perf_counter()
        kernels.cdist_dtw_sq(tiny, impl="numba")
        kernels.dba(tiny[0], tiny, impl="numba")
        print(f"numba compile: {time.perf_counter() - t:.2f} s")

    print(f"{X.shape[0]} profiles x {X.shape[1]} samples, band={args.band}")
    print(f"{'kernel':<22}" + "".join(f"{i:>12}" for i in impls) + ("     speedup" if len(impls) == 2 else ""))
    rows = {
        "pairwise DTW": lambda impl: kernels.cdist_dtw_sq(X, band=args.band, impl=impl),
        "DBA (10 iterations)": lambda impl: kernels.dba(X.mean(axis=0), X, args.band, impl=impl),
    }
    for name, fn in rows.items():
        timings, results = [], []
        for impl in impls:
            sec, res = best_of(args.repeat, lambda: fn(impl))
            timings.append(sec)
            results.append(res)
        line = f"{name:<22}" + "".join(f"{s:>11.3f}s" for s in timings)
        if len(impls) == 2:
            same = np.array_equal(results[0], results[1])
            line += f"{timings[0] / timings[1]:>11.1f}x" + ("" if same else "  (results differ!)")
        print(line)

    saved = kernels.USE_NUMBA
    timings = []
    try:
        for impl in impls:
            kernels.USE_NUMBA = impl == "numba"
            sec, _ = best_of(1, lambda: fit_kmeans(X, 3, "dtw", seed=0, n_init=3))
            timings.append(sec)
    finally:
        kernels.USE_NUMBA = saved
    line = f"{'DTW k-means (n_init=3)':<22}" + "".join(f"{s:>11.3f}s" for s in timings)
    if len(impls) == 2:
        line += f"{timings[0] / timings[1]:>11.1f}x"
    print(line)


if __name__ == "__main__":
    main()
