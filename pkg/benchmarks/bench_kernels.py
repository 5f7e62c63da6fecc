"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Each row integrates the same flows and Koenigs quadratures under both
backends and reports the best wall time of ``--repeat`` runs.
"""
import argparse
import timeit

import numpy as np

from halfplane import available_backends
from halfplane.expr import compile_ast, parse_expression

CASES = {
    "eval (z+1)/(z+3), 10^4 points": "eval",
    "dopri moebius, t=20": "dopri",
    "dopri power 0.5 on a ray, t=20": "dopri_ray",
    "GK15 segment [1, 1e-3+1e3i]": "segment",
}


def _workloads(k):
    moeb = compile_ast(parse_expression("(z+1)/(z+3)"))
    root = compile_ast(parse_expression("z^0.5"))
    pts = np.random.default_rng(0).uniform(0.1, 10, (10_000, 2)) @ np.array([1, 1j])
    times = np.linspace(0, 20, 21)
    return {
        "eval": lambda: [k.eval_program(moeb.code, moeb.consts, z) for z in pts],
        "dopri": lambda: k.dopri(moeb.code, moeb.consts, 1, 1 + 1j, times, 1e-10, 1e-12,
                                 np.inf, 200_000, 1e-12),
        "dopri_ray": lambda: k.dopri(root.code, root.consts, np.exp(0.5j), 1 + 1j, times, 1e-10,
                                     1e-12, np.inf, 200_000, 1e-12),
        "segment": lambda: k.segment_integral(moeb.code, moeb.consts, 1, 1e-3 + 1e3j, 1e-13, 1e-16),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = available_backends()
    loads = {name: _workloads(k) for name, k in backends.items()}
    names = list(backends)
    print(f"{'case':36s}" + "".join(f"{n:>12s}" for n in names) + ("    speedup" if len(names) > 1 else ""))
    for label, key in CASES.items():
        best = {n: min(timeit.repeat(loads[n][key], number=1, repeat=args.repeat)) for n in names}
        row = f"{label:36s}" + "".join(f"{best[n] * 1e3:10.2f}ms" for n in names)
        if "cython" in best:
            row += f"{best['python'] / best['cython']:10.1f}x"
        print(row)


if __name__ == "__main__":
    main()
