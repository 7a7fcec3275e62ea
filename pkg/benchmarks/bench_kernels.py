"""Time the numba kernels against the numpy fallback on pipeline-sized inputs.

Usage: python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from capcover import kernels
from capcover.exact import integral_assignment
from capcover.gen import gen_random_euclidean
from capcover.lpcore import simplex_solve
from capcover.relax import build_mmcc_lp, solve_relaxation


def best_of(fn, repeat):
    fn()  # warm-up, includes JIT compilation for numba
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    a, b = rng.random((1500, 3)), rng.random((1500, 3))
    inst = gen_random_euclidean(args.seed, 100, 35, 2, (0.05, 0.3))
    lp, _ = build_mmcc_lp(inst)
    frac = solve_relaxation(inst)
    everyone = list(range(inst.m))

    cases = {
        "pairwise_distances 1500x1500": lambda impl: kernels.pairwise_distances(a, b, impl=impl),
        f"simplex MMCC-LP ({lp.A.shape[0]}x{lp.A.shape[1]})": lambda impl: simplex_solve(lp, impl=impl),
        f"max_flow assignment (m={inst.m}, n={inst.n})": lambda impl: integral_assignment(inst, everyone, frac.x, impl=impl),
    }
    print(f"{'kernel':<40} {'numpy [ms]':>12} {'numba [ms]':>12} {'speedup':>9}")
    for name, fn in cases.items():
        t_np = best_of(lambda: fn(kernels.backend("numpy")), args.repeat)
        t_nb = best_of(lambda: fn(kernels.backend("numba")), args.repeat)
        print(f"{name:<40} {1e3 * t_np:>12.3f} {1e3 * t_nb:>12.3f} {t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
