"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Each workload is run on both backends; outputs are checked to be identical
before timings are reported.
"""

import argparse
import random
import time

from randdyn import kernels
from randdyn.degree_lab import dyndeg_birkhoff_mc
from randdyn.maps import compose, parse_map
from randdyn.random_model import FiniteMeasure, family_measure


def _time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def workloads():
    th = family_measure("power_plus_c").thresholds
    rng = random.Random(0)
    a = {rng.randrange(0, 4000): rng.randrange(-(10**20), 10**20) for _ in range(300)}
    b = {rng.randrange(0, 4000): rng.randrange(-(10**20), 10**20) for _ in range(300)}
    a_args = (list(a), list(a.values()), list(b), list(b.values()))
    sc = FiniteMeasure.uniform({"a": parse_map("x^2", 1, "a"), "b": parse_map("x^3", 1, "b")})
    f = parse_map("X0^2 + X1*X2 : X1^2 - X0*X2 : X2^2 + 2*X0*X1", 2)
    f3 = compose(f, compose(f, f))
    return [
        ("draw_block 10^5", lambda: list(kernels.draw_block(1, 0, 0, 100_000))),
        ("sample_block 10^5 (Poisson table)", lambda: list(kernels.sample_block(1, 0, 0, 100_000, th))),
        ("count_block 64 x 10^4", lambda: [list(r) for r in kernels.count_block(1, 0, 64, 10_000, th)]),
        ("mul_packed 300 x 300 terms", lambda: dict(kernels.mul_packed(*a_args))),
        ("Birkhoff estimate n=10^4, 64 trials", lambda: dyndeg_birkhoff_mc(sc, 10_000, 64, seed=0)),
        ("compose degree-8 map on P^2", lambda: compose(f3, f)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not kernels.compiled_available():
        raise SystemExit("compiled kernels are not built; run: pip install -e . --no-build-isolation")
    print(f"{'workload':<38} {'python':>10} {'cython':>10} {'speedup':>8}")
    for name, fn in workloads():
        kernels.use_backend("python")
        tp, op = _time(fn, args.repeat)
        kernels.use_backend("cython")
        tc, oc = _time(fn, args.repeat)
        if op != oc:
            raise SystemExit(f"backends disagree on {name}")
        print(f"{name:<38} {tp:>9.4f}s {tc:>9.4f}s {tp / tc:>7.1f}x")


if __name__ == "__main__":
    main()
