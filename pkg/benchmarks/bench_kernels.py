"""Time the compiled kernels against the pure Python fallback.

    python benchmarks/bench_kernels.py [--repeat 3] [--n 500]

Both backends consume the same bit generators, so the script also checks that
their outputs agree before reporting timings.
"""

import argparse
import time

import numpy as np

from nbpmt import _backend


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_gig(mod, size):
    def run():
        return mod.gig_draws(np.random.Generator(np.random.PCG64(7)), 0.8, 2.0, -0.45, size)
    return run


def bench_sweeps(mod, x, sweeps):
    def run():
        n = x.size
        bank = mod.make_bank(np.random.Generator(np.random.PCG64(11)).spawn(n))
        theta, lam, xi, w = x.copy(), np.ones(n), np.ones(n), np.zeros(n)
        for _ in range(sweeps):
            mod.gibbs_sweep(bank, x, theta, lam, xi, w, 0.1, 0.502)
        return theta
    return run


def bench_kappa(mod, t):
    def run():
        return mod.log_kappa_integrals(t, 1.002, 0.1, 1e-10, 200)[0]
    return run


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--n", type=int, default=500, help="coordinates per Gibbs sweep")
    ap.add_argument("--sweeps", type=int, default=20)
    ap.add_argument("--gig", type=int, default=20000, help="number of GIG draws")
    ap.add_argument("--kappa", type=int, default=2000, help="number of kappa integrals")
    args = ap.parse_args(argv)

    try:
        fast = _backend.load("cython")
    except ImportError:
        print("compiled backend not built; nothing to compare")
        return 1
    slow = _backend.load("python")

    x = np.random.default_rng(3).normal(size=args.n)
    x[: args.n // 10] += 4.0
    t = 0.5 * np.linspace(0, 12, args.kappa) ** 2
    cases = [
        (f"GIG draws ({args.gig})", lambda m: bench_gig(m, args.gig)),
        (f"Gibbs sweeps ({args.sweeps} x n={args.n})", lambda m: bench_sweeps(m, x, args.sweeps)),
        (f"kappa integrals ({args.kappa})", lambda m: bench_kappa(m, t)),
    ]
    print(f"{'kernel':<32}{'cython s':>12}{'python s':>12}{'speedup':>10}  agree")
    for label, make in cases:
        tc, oc = best_of(make(fast), args.repeat)
        tp, op = best_of(make(slow), args.repeat)
        agree = np.allclose(oc, op, rtol=1e-12, atol=0)
        print(f"{label:<32}{tc:>12.4f}{tp:>12.4f}{tp / tc:>10.1f}  {agree}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
