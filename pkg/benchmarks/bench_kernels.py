"""Compare the compiled and pure-Python Denjoy kernels.

    python benchmarks/bench_kernels.py [--i-max 100000] [--points 100000] [--iterates 100000]
"""
from __future__ import annotations

import argparse
import math
import timeit

import numpy as np

from wanderlab.denjoy import GapLaw, build_denjoy


def _best(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--i-max", type=int, default=100_000)
    ap.add_argument("--points", type=int, default=100_000)
    ap.add_argument("--iterates", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    alpha = (math.sqrt(5) - 1) / 2
    ys = np.random.default_rng(0).random(args.points)
    maps = {name: build_denjoy(alpha, GapLaw(0.5), i_max=args.i_max, backend=name, check=False)
            for name in ("cython", "python")}
    # both backends must agree (to rounding) before their timings mean anything
    gc, dc = maps["cython"].eval(ys)
    gp, dp = maps["python"].eval(ys)
    if max(np.max(np.abs(gc - gp)), np.max(np.abs(dc - dp))) > 1e-15:
        raise SystemExit("backends disagree")

    rows = []
    for name, d in maps.items():
        t_eval = _best(lambda: d.eval(ys), args.repeat)
        t_orbit = _best(lambda: d.orbit(0.0, args.iterates), args.repeat)
        rows.append((name, t_eval, t_orbit))
    print(f"gaps {2 * args.i_max + 1}, eval batch {args.points}, orbit length {args.iterates}")
    print(f"{'backend':<8} {'eval [s]':>10} {'orbit [s]':>10} {'orbit [us/step]':>16}")
    for name, te, to in rows:
        print(f"{name:<8} {te:>10.4f} {to:>10.4f} {1e6 * to / args.iterates:>16.3f}")
    (_, ce, co), (_, pe, po) = rows
    print(f"speedup  {pe / ce:>10.1f}x {po / co:>9.1f}x")


if __name__ == "__main__":
    main()
