"""Compare the compiled and pure-numpy batch bisection kernels.

Usage::

    python benchmarks/bench_kernels.py [--k 10] [--repeats 7]

Prints median wall time per batch for each backend, the speedup, and the
largest difference in ``tau*`` between the two (they should agree to a few
ulps).
"""
import argparse
import time

import numpy as np

from fdiv import kernels
from fdiv.generators import make_generator
from fdiv.solver import SolverConfig, bisect_batch


def median_time(fn, repeats, warmup=2):
    for _ in range(warmup):
        fn()
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--repeats", type=int, default=7)
    ap.add_argument("--sizes", default="16,256,4096,32768")
    ap.add_argument("--divergences", default="kl,jensen-shannon,jeffreys,chi-square,alpha")
    args = ap.parse_args()

    if "compiled" not in kernels.BACKENDS:
        print("compiled kernel not built; only the python backend is available")
        return
    rng = np.random.default_rng(0)
    cfg = SolverConfig(tolerance=1e-10, max_iterations=100)
    print(f"{'divergence':18s} {'batch':>7s} {'compiled[s]':>12s} {'python[s]':>12s} "
          f"{'speedup':>8s} {'max|dtau|':>10s}")
    for name in args.divergences.split(","):
        g = make_generator(name, 1.5 if name == "alpha" else None)
        for b in (int(s) for s in args.sizes.split(",")):
            theta = rng.uniform(-5, 5, (b, args.k))
            q = rng.uniform(0.1, 3, args.k)
            tc = median_time(lambda: bisect_batch(g, theta, q, cfg, backend="compiled"), args.repeats)
            tp = median_time(lambda: bisect_batch(g, theta, q, cfg, backend="python"), args.repeats)
            dtau = np.max(np.abs(bisect_batch(g, theta, q, cfg, backend="compiled")[0]
                                 - bisect_batch(g, theta, q, cfg, backend="python")[0]))
            print(f"{g.name:18s} {b:7d} {tc:12.5f} {tp:12.5f} {tp / tc:8.1f} {dtau:10.2e}")


if __name__ == "__main__":
    main()
