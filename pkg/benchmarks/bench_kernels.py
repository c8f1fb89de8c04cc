"""Time the numba and numpy backends on the solver's hot loops and on full solves.

    python3 benchmarks/bench_kernels.py --groups 5 15 40 --repeat 20
"""

import argparse
import time

import numpy as np

from nomamec import kernels
from nomamec.scenario import ScenarioSpec, generate
from nomamec.solver import solve


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times), float(np.median(times))


def kernel_cases(inst):
    arr = inst.arrays
    B, T, F = inst.bandwidth, inst.deadline, inst.cloud_capacity
    d = 0.5 * (arr.D + arr.R)
    s = d.sum(axis=1)
    c = np.full(inst.n_groups, B * T / inst.n_groups)
    return {
        "time_allocation": lambda be: kernels.time_allocation(arr.a1, arr.a2, s, d[:, 1].copy(), B, T, backend=be),
        "data_allocation": lambda be: kernels.data_allocation(arr.a1, arr.a2, arr.C, arr.P, arr.D, arr.R, c, 0.5 * F, backend=be),
        "solve": lambda be: solve(inst, backend=be),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--groups", type=int, nargs="+", default=[5, 15, 40])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    backends = kernels.available_backends()
    # first numba call compiles (or loads the on-disk cache); keep it out of the timings
    warm = generate(ScenarioSpec(seed=args.seed, n_users=4))
    for fn in kernel_cases(warm).values():
        for be in backends:
            fn(be)

    print(f"{'N':>4} {'kernel':<16} " + " ".join(f"{be + ' ms':>14}" for be in backends) + "   speedup")
    for n in args.groups:
        inst = generate(ScenarioSpec(seed=args.seed, n_users=2 * n, cloud_capacity=6e9 * n / 15))
        for name, fn in kernel_cases(inst).items():
            med = {be: best_of(lambda: fn(be), args.repeat)[1] for be in backends}
            speed = med["numpy"] / med["numba"] if "numba" in med else float("nan")
            cols = " ".join(f"{med[be] * 1e3:14.3f}" for be in backends)
            print(f"{n:>4} {name:<16} {cols}   {speed:6.1f}x")


if __name__ == "__main__":
    main()
