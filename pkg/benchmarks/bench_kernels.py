"""Compare the compiled kernels with the pure-Python fallback.

Both modules are imported directly, so the environment switch is not needed.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import math
import timeit

import numpy as np

from scmref import _kernels_py
from scmref.acm import thermal_voltage
from scmref.constants import DEFAULT_GRID_K

try:
    from scmref import _kernels as _kernels_cy
except ImportError:
    _kernels_cy = None


def workloads(mod):
    grid = DEFAULT_GRID_K
    u_t = np.array([thermal_voltage(T) for T in grid])
    offset = np.ascontiguousarray(0.02 / (1.2 * u_t))
    weight = np.ascontiguousarray((grid / 298.15) ** 0.75)
    span = float(grid[-1] - grid[0])
    rhs_many = np.linspace(1.2, 3.0, 1000)
    ks = np.geomspace(1.0, 40.0, 41)
    alphas = np.linspace(2.0, 8.0, 7)

    def tc_map():
        for a in alphas:
            for k in ks:
                mod.box_tc_cell(float(a), offset + math.log(k), weight, span)

    return {
        "acm_f x1e4": lambda: [mod.acm_f(v) for v in np.geomspace(1e-6, 1e4, 10_000)],
        "solve_if2_many x1e3": lambda: mod.solve_if2_many(2.9, rhs_many),
        "solve_beta x1e3": lambda: [mod.solve_beta(6.78, t, 1e-9) for t in np.linspace(0.01, 2.0, 1000)],
        "tc map 7x41 cells": tc_map,
    }


def bench(mod, repeat):
    out = {}
    for name, fn in workloads(mod).items():
        fn()  # warm up
        out[name] = min(timeit.repeat(fn, number=1, repeat=repeat))
    return out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    py = bench(_kernels_py, args.repeat)
    cy = bench(_kernels_cy, args.repeat) if _kernels_cy is not None else None
    print(f"{'workload':<22}{'python [ms]':>14}{'cython [ms]':>14}{'speedup':>10}")
    for name, t_py in py.items():
        if cy is None:
            print(f"{name:<22}{t_py * 1e3:>14.2f}{'n/a':>14}{'n/a':>10}")
        else:
            print(f"{name:<22}{t_py * 1e3:>14.2f}{cy[name] * 1e3:>14.2f}{t_py / cy[name]:>9.1f}x")


if __name__ == "__main__":
    main()
