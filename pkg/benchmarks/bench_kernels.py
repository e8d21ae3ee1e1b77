"""Time each hot kernel under the numba and numpy backends.

    python3 benchmarks/bench_kernels.py --horizons 10 14 18 --repeat 5

Prints one CSV row per (kernel, N, backend) with the best wall time in
milliseconds.  The dense kernel_apply is quadratic in the table size and is
only timed for N <= 10.
"""
import argparse
import csv
import sys
import timeit

import numpy as np

from discrete_malliavin import kernels
from discrete_malliavin.space import new_space

KERNEL_APPLY_MAX_N = 10


def cases(sp, values):
    out = {
        "walsh_forward": lambda b: b.walsh_forward(values, sp.p_array, sp.q_array, sp.sqrt_pq),
        "walsh_inverse": lambda b: b.walsh_inverse(values, sp.y_minus, sp.y_plus),
        "weighted_sum": lambda b: b.weighted_sum(values, sp.probabilities),
        "marginalize_high": lambda b: b.marginalize_high(values, sp.p_array, sp.q_array, sp.n_bits // 2),
        "finite_difference": lambda b: b.finite_difference(values, sp.N // 2, 0.5),
        "independent_of_bits_from": lambda b: b.independent_of_bits_from(values, sp.n_bits - 1, 1e-12),
    }
    if sp.N <= KERNEL_APPLY_MAX_N:
        out["kernel_apply"] = lambda b: b.kernel_apply(values, sp.probabilities, sp.y_table, 0.5)
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--horizons", type=int, nargs="+", default=[10, 14, 18])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    rng = np.random.default_rng(args.seed)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["kernel", "N", "backend", "best_ms", "speedup_vs_numpy"])
    for N in args.horizons:
        sp = new_space(N, rng.uniform(0.1, 0.9, N + 1))
        values = rng.normal(size=sp.size)
        for name, call in cases(sp, values).items():
            timings = {}
            for bname, mod in sorted(backends.items()):
                call(mod)  # warm-up, includes JIT compilation
                timings[bname] = min(timeit.repeat(lambda: call(mod), number=1, repeat=args.repeat))
            for bname, t in timings.items():
                writer.writerow([name, N, bname, f"{1e3 * t:.3f}", f"{timings['numpy'] / t:.2f}"])


if __name__ == "__main__":
    main()
