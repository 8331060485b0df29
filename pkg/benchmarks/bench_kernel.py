"""Compare the compiled and pure-Python integration kernels.

Times ``Kernel.advance`` over a fixed number of RK4 steps for one and three
GFLCs, checks that both backends land on the same state, and reports one
end-to-end scenario run per backend.

    python3 benchmarks/bench_kernel.py [--steps N] [--repeat R]
"""

import argparse
import sys
import time
import warnings

import numpy as np

from gflswitch.kernels import BACKEND, Kernel
from gflswitch.presets import preset
from gflswitch.simulator import Simulator, run_scenario


def packed(case: str):
    sim = Simulator(preset(case))
    scal, gfl = sim.pack()
    y = sim.y.copy()
    y[1 + sim.n :] = 5.0  # a non-trivial PLL frequency so the steps do real work
    return y, scal, gfl


def time_advance(kernel: Kernel, y0, scal, gfl, steps: int, repeat: int):
    best = float("inf")
    y = y0.copy()
    for _ in range(repeat):
        y = y0.copy()
        prev = np.empty_like(y)
        t0 = time.perf_counter()
        kernel.advance(y, 5e-5, steps, scal, gfl, 0, prev)
        best = min(best, time.perf_counter() - t0)
    return best, y


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    warnings.simplefilter("ignore", UserWarning)  # test system 2 is weakly coupled by design

    backends = ["python"] + (["cython"] if BACKEND == "cython" else [])
    if len(backends) == 1:
        print("compiled kernel not built; timing the pure-Python backend only")

    print(f"{'case':8} {'backend':8} {'steps':>7} {'seconds':>9} {'us/step':>9}")
    for case in ("CASE1", "CASE10"):
        y0, scal, gfl = packed(case)
        finals = {}
        times = {}
        for b in backends:
            sec, y = time_advance(Kernel(b), y0, scal, gfl, args.steps, args.repeat)
            finals[b], times[b] = y, sec
            print(f"{case:8} {b:8} {args.steps:7d} {sec:9.4f} {1e6 * sec / args.steps:9.2f}")
        if len(backends) == 2:
            dev = float(np.max(np.abs(finals["python"] - finals["cython"])))
            print(f"{case:8} speed-up x{times['python'] / times['cython']:.1f}, max state difference {dev:.2e}")

    for b in backends:
        t0 = time.perf_counter()
        s = run_scenario(preset("CASE3"), kernel=Kernel(b)).summary
        print(f"CASE3 end-to-end ({b}): {time.perf_counter() - t0:.2f} s, final mode {s.final_mode}, PLL {s.pll}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
