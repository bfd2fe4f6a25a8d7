"""Compare the compiled kernels with the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Times the scalar and vectorised hypergeometric evaluations and the ragged
interference reduction used by the Monte Carlo engine, then checks that both
backends agree.
"""

import argparse
import timeit

import numpy as np

from miacomp._backend import get_kernels


def cases(k, rng):
    x = np.geomspace(1e-4, 1e6, 20_000)
    scalars = x[::40].tolist()
    counts = rng.poisson(700, 1000)
    total = int(counts.sum())
    u, h = rng.random(total), rng.standard_exponential(total)
    r2_in = rng.exponential(1 / np.pi, 1000)
    r2_out = np.maximum(225.0, 100 * r2_in)
    d = 2 / 3

    def scalar_loop():
        for v in scalars:
            k.hyp_f(d, v)
            k.hyp_f_deriv(d, v)

    return {
        "hyp_f scalar x1000 (+deriv)": scalar_loop,
        "hyp_f_array 20k": lambda: k.hyp_f_array(d, x),
        "hyp_h_array 20k": lambda: k.hyp_h_array(d, x),
        "interference_sums 1000 trials": lambda: k.interference_sums(counts, u, h, r2_in, r2_out, 3.0),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    py = get_kernels("python")
    try:
        compiled = get_kernels("compiled")
    except ImportError:
        print("compiled kernels not built; only the fallback is timed")
        compiled = None

    results = {}
    for name, k in (("python", py), ("compiled", compiled)):
        if k is None:
            continue
        for label, fn in cases(k, np.random.default_rng(0)).items():
            results.setdefault(label, {})[name] = min(timeit.repeat(fn, number=1, repeat=args.repeat))

    print(f"{'kernel':32s} {'python [ms]':>12s} {'compiled [ms]':>14s} {'speedup':>8s}")
    for label, t in results.items():
        c = t.get("compiled")
        row = f"{label:32s} {1e3 * t['python']:12.2f}"
        row += f" {1e3 * c:14.2f} {t['python'] / c:8.1f}x" if c else f" {'-':>14s} {'-':>8s}"
        print(row)

    if compiled is not None:
        x = np.geomspace(1e-6, 1e9, 1000)
        diff = np.max(np.abs(compiled.hyp_f_array(0.7, x) / py.hyp_f_array(0.7, x) - 1))
        print(f"max relative difference in hyp_f between backends: {diff:.2e}")


if __name__ == "__main__":
    main()
