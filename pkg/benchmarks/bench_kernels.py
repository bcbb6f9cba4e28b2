"""Compiled vs pure-Python kernels on the three hot loops.

Run ``python benchmarks/bench_kernels.py``; each case reports the best of
several repeats and the speed-up.  Both backends are checked to agree
before timing.
"""

import argparse
import time

import numpy as np

from pdptools import kernels
from pdptools.core import PdParams
from pdptools.samplers import sample_crp_batch
from pdptools.stirling import build_log_table, build_ratio_table


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def crp(backend, N, draws):
    rng = np.random.default_rng(0)
    return np.concatenate([o for o, _ in sample_crp_batch(PdParams(0.5, 1.0), N, draws, rng, backend=backend)])


def cases(scale):
    n = 2000 * scale
    return [
        (f"log Stirling table n={n}, t<=500", lambda be: build_log_table(0.5, n, 500, backend=be).log_S(n, 10)),
        (f"ratio table n={n}, t<=500", lambda be: build_ratio_table(0.5, n, 500, backend=be).V(n, 10)),
        (f"CRP batch N=100, {20000 * scale} draws", lambda be: crp(be, 100, 20000 * scale)),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--scale", type=int, default=1, help="problem-size multiplier")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()
    if kernels.compiled_kernels is None:
        raise SystemExit("compiled kernels are not built; run pip install -e . --no-build-isolation")
    print(f"{'case':<40} {'python s':>10} {'compiled s':>11} {'speed-up':>9}")
    for name, fn in cases(args.scale):
        py_val, c_val = fn("python"), fn("compiled")
        if not np.allclose(py_val, c_val, rtol=1e-12):
            raise SystemExit(f"{name}: backends disagree")
        t_py = best_of(lambda: fn("python"), args.repeats)
        t_c = best_of(lambda: fn("compiled"), args.repeats)
        print(f"{name:<40} {t_py:>10.4f} {t_c:>11.4f} {t_py / t_c:>8.1f}x")


if __name__ == "__main__":
    main()
