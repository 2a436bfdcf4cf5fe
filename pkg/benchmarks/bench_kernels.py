"""Compare the compiled kernels with the pure-Python fallback.

Usage: ``python benchmarks/bench_kernels.py [--repeat N] [--starts N]``.
Prints timings, speed-ups and the largest disagreement between the backends.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from cmcfoliation import _kernels_py
from cmcfoliation.radial_metric import build_profile

try:
    from cmcfoliation import _kernels
except ImportError:  # extension not built
    _kernels = None


def _best(fn, repeat: int) -> float:
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _integrate_all(mod, args, starts):
    return [mod.integrate_profile(*args, H, r, sig, 20.0, 1e-6, 1.0, np.inf, False,
                                  1e-10, 1e-12, 1_000_000) for r, sig, H in starts]


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--starts", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ns = ap.parse_args(argv)

    prof = build_profile()
    args = prof.kernel_args()
    rng = np.random.default_rng(ns.seed)
    grid = np.linspace(0.0, 1.0, 100_001)
    starts = [(rng.uniform(0.02, 0.98), rng.uniform(-np.pi, np.pi), rng.uniform(0.2, 3.0))
              for _ in range(ns.starts)]

    backends = {"python": _kernels_py}
    if _kernels is not None:
        backends["cython"] = _kernels
    else:
        print("compiled extension not available; timing the fallback only")

    rows = {}
    for name, mod in backends.items():
        t_eval = _best(lambda: mod.profile_eval(*args, grid), ns.repeat)
        t_int = _best(lambda: _integrate_all(mod, args, starts), 1)
        rows[name] = (t_eval, t_int)
        print(f"{name:>7}: profile_eval({grid.size}) {t_eval * 1e3:9.2f} ms   "
              f"integrate x{len(starts)} {t_int * 1e3:9.2f} ms")

    if "cython" in rows:
        (pe, pi), (ce, ci) = rows["python"], rows["cython"]
        print(f"speed-up: profile_eval {pe / ce:.1f}x   integrate {pi / ci:.1f}x")
        ev = max(float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))
                 for a, b in zip(_kernels_py.profile_eval(*args, grid),
                                 _kernels.profile_eval(*args, grid)))
        tr_py = _integrate_all(_kernels_py, args, starts)
        tr_c = _integrate_all(_kernels, args, starts)
        dj = max(abs(p[4][-1] - c[4][-1]) for p, c in zip(tr_py, tr_c))
        dr = max(abs(p[1][-1] - c[1][-1]) for p, c in zip(tr_py, tr_c))
        print(f"max backend difference: profile_eval {ev:.2e}   final r {dr:.2e}   "
              f"final J {dj:.2e}")


if __name__ == "__main__":
    main()
