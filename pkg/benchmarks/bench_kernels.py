"""Time the banded hot kernels on both backends.

Imports the numpy and numba implementations side by side so one process
can compare them; the package itself picks a backend at import time via
the ETACALC_NUMBA environment variable (see etacalc.backend).

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from etacalc import _kernels_numpy as knp
from etacalc.backend import BACKEND

try:
    from etacalc import _kernels_numba as knb
except ImportError:
    knb = None

KERNELS = ("band_conv", "toeplitz_window", "deep_repair", "deep_residual",
           "band_times_local", "local_times_band")


def _best(fn, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def _cband(rng, w, F):
    return (rng.standard_normal((2 * w + 1, F, F))
            + 1j * rng.standard_normal((2 * w + 1, F, F)))


def _cases(rng):
    """Representative shapes: small identity-suite grids up to the
    window-60 excision size."""
    out = []
    for F, w, ns in ((4, 2, 40), (16, 3, 60), (32, 3, 120)):
        c1, c2 = _cband(rng, w, F), _cband(rng, w, F)
        wv = rng.uniform(0.5, 1.5, F)
        mat = knp.toeplitz_window(c1, ns)
        x4 = (rng.standard_normal((ns, ns, F, F))
              + 1j * rng.standard_normal((ns, ns, F, F)))
        args = {
            "band_conv": (c1, c2, wv),
            "toeplitz_window": (c1, ns),
            "deep_repair": (mat, c1, ns, F, ns // 2),
            "deep_residual": (mat, c1, ns, F, ns // 2),
            "band_times_local": (c1, x4, wv),
            "local_times_band": (x4, c1, wv),
        }
        out.append(((F, w, ns), args))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5,
                    help="timing repetitions, best-of (default 5)")
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    cases = _cases(rng)
    print("package backend: %s" % BACKEND)
    if knb is None:
        print("numba unavailable; timing the numpy path only")
    else:
        # compile outside the timed region
        for _, kargs in cases[:1]:
            for name in KERNELS:
                getattr(knb, name)(*kargs[name])

    print("%-18s %4s %3s %5s %11s %11s %9s"
          % ("kernel", "F", "w", "ns", "numpy ms", "numba ms", "speedup"))
    for (F, w, ns), kargs in cases:
        for name in KERNELS:
            tn = _best(getattr(knp, name), kargs[name], args.repeat)
            if knb is None:
                print("%-18s %4d %3d %5d %11.3f %11s %9s"
                      % (name, F, w, ns, 1e3 * tn, "-", "-"))
                continue
            tb = _best(getattr(knb, name), kargs[name], args.repeat)
            print("%-18s %4d %3d %5d %11.3f %11.3f %8.1fx"
                  % (name, F, w, ns, 1e3 * tn, 1e3 * tb, tn / tb))


if __name__ == "__main__":
    main()
