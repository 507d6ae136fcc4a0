"""Timing comparison of the compiled and numpy evaluation kernels.

Two workloads bracket the real usage pattern:
  control   one tau at a time, position + velocity (the impedance loop)
  sampling  K=200 grid, all four orders (profile export)

Run:  python3 benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import statistics
import time

import numpy as np

from trajfield.field import init_siren, identity_mods, modulate, uniform_grid
from trajfield.kernels import BACKEND, pycore

try:
    from trajfield.kernels import _fastpath
except ImportError:
    _fastpath = None


def _field(L, width, D, seed):
    meta = init_siren(L, (width,) * L, D, omega0=30.0, seed=seed)
    return modulate(meta, identity_mods(meta))


def _args(field):
    return list(field.weights), list(field.biases), field.w_out, field.b_out, 30.0


def _time_call(fn, repeats, inner):
    best = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        best.append((time.perf_counter() - t0) / inner)
    return statistics.median(best)


def bench(field, label, repeats):
    W, b, w_out, b_out, om = _args(field)
    tau1 = np.array([0.37])
    grid = uniform_grid(200)

    def compiled_ctl():
        _fastpath.eval_orders(W, b, w_out, b_out, om, tau1, 1)

    def python_ctl():
        pycore.eval_orders(W, b, w_out, b_out, om, tau1, 1, "sine")

    def compiled_smp():
        _fastpath.eval_orders(W, b, w_out, b_out, om, grid, 3)

    def python_smp():
        pycore.eval_orders(W, b, w_out, b_out, om, grid, 3, "sine")

    rows = []
    for name, cf, pf, inner in (
        ("control tau=1 order=1", compiled_ctl, python_ctl, 200),
        ("sampling K=200 order=3", compiled_smp, python_smp, 50),
    ):
        tp = _time_call(pf, repeats, inner)
        tc = _time_call(cf, repeats, inner) if _fastpath else float("nan")
        rows.append((f"{label} {name}", tc, tp))
    return rows


def parity(field):
    """Worst per-order difference, normalized by that order's magnitude."""
    W, b, w_out, b_out, om = _args(field)
    grid = uniform_grid(101)
    a = _fastpath.eval_orders(W, b, w_out, b_out, om, grid, 3)
    c = pycore.eval_orders(W, b, w_out, b_out, om, grid, 3, "sine")
    worst = 0.0
    for x, y in zip(a, c):
        scale = max(1.0, float(np.max(np.abs(y))))
        worst = max(worst, float(np.max(np.abs(x - y))) / scale)
    return worst


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=7)
    args = ap.parse_args()

    print(f"active backend: {BACKEND}")
    if _fastpath is None:
        print("compiled extension not importable; timing the numpy path only")

    rows = []
    rows += bench(_field(3, 64, 7, 0), "L=3 w=64 D=7 ", args.repeats)
    rows += bench(_field(2, 32, 2, 1), "L=2 w=32 D=2 ", args.repeats)

    width = max(len(r[0]) for r in rows)
    print(f"{'workload':<{width}}  compiled      numpy         speedup")
    for name, tc, tp in rows:
        ratio = tp / tc if tc == tc and tc > 0 else float("nan")
        print(f"{name:<{width}}  {tc * 1e6:9.1f}us  {tp * 1e6:9.1f}us  {ratio:6.1f}x")

    if _fastpath is not None:
        print(f"parity (normalized, orders 0..3): {parity(_field(3, 64, 7, 0)):.2e}")


if __name__ == "__main__":
    main()
