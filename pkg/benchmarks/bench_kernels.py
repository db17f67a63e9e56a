"""Time the numba kernels against their pure-numpy fallbacks.

Run:  python benchmarks/bench_kernels.py [--particles 2048] [--grid 256]

Each hot kernel is timed over repeated calls after a warmup (so numba
compilation is excluded) and the speedup is reported. The same script doubles
as a smoke check that both backends agree on the benchmark inputs.
"""

import argparse
import time

import numpy as np

from tcsflock import backends
from tcsflock._kernels_numpy import POT_LOG_BUMP


def make_inputs(n, m):
    rng = np.random.default_rng(0)
    x = rng.random(n)
    v = rng.standard_normal(n)
    th = rng.uniform(1.5, 2.5, n)
    w = np.full(n, 1.0 / n)
    krow = 1.0 / np.sqrt(1.0 + 3.0 * np.minimum(np.arange(m), m - np.arange(m)) ** 2 / m**2)
    g = rng.standard_normal(m)
    rho = rng.random(m) + 0.5
    ue = rng.standard_normal(m)
    ie = rng.random(m) + 0.2
    return {
        "pairwise_alignment": (x, v, th, w, 1.0, 3.0, 0.0, 1.0, 3.0, 0.0,
                               POT_LOG_BUMP, 0.0, 0.0, 0.0),
        "cross_alignment": (x, v, th, x[: n // 2], v[: n // 2], th[: n // 2],
                            1.0, 3.0, 0.0),
        "max_pairwise_dist": (x,),
        "deposit_periodic": (x, np.stack([w, w * v, w * th]), m, 2.0 / m),
        "convolve_direct": (krow, g, 1.0 / m),
        "fluid_sources": (rho, ue, ie, krow, krow, 1.0 / m),
        "weno5_flux_divergence": (rho, ue, 1.0 / m),
    }


def timeit(fn, args, repeats):
    fn(*args)  # warmup / compile
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--particles", type=int, default=2048)
    ap.add_argument("--grid", type=int, default=256)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    cases = make_inputs(args.particles, args.grid)
    pairs = {name: (np_fn, nb_fn) for name, np_fn, nb_fn in backends.kernel_pairs()}
    print(f"active backend: {backends.ACTIVE}  "
          f"(N={args.particles}, M={args.grid}, best of {args.repeats})")
    print(f"{'kernel':<24}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, call in cases.items():
        np_fn, nb_fn = pairs[name]
        t_np = timeit(np_fn, call, args.repeats)
        if nb_fn is np_fn:
            print(f"{name:<24}{1e3 * t_np:>12.3f}{'n/a':>12}{'--':>10}")
            continue
        t_nb = timeit(nb_fn, call, args.repeats)
        a = np_fn(*call)
        b = nb_fn(*call)
        if not isinstance(a, tuple):
            a, b = (a,), (b,)
        ok = all(np.allclose(ai, bi, rtol=1e-10, atol=1e-12) for ai, bi in zip(a, b))
        flag = "" if ok else "  MISMATCH"
        print(f"{name:<24}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}"
              f"{t_np / t_nb:>10.1f}{flag}")


if __name__ == "__main__":
    main()
