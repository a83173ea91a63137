"""Compiled vs pure-Python evaluation of expression programs.

    python3 benchmarks/bench_vm.py [--repeat N]

Times single-point calls and a batch on three workloads: a small scalar
expression, the metric jet of a 4-dimensional doubly warped chart (metric plus
first and second derivatives), and one full per-point geometry evaluation of a
bundled scenario with each backend installed.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from dwarp import exprs as ex, vm
from dwarp.harness import bundled_path, load_scenario


SCENARIO_POINT = """
import sys, timeit
from dwarp import dwpimm as di
from dwarp.harness import bundled_path, load_scenario
s = load_scenario(bundled_path("generic_4d_doubly_warped")).scenario
pts = s.sample(40, 1)
di.DwpPoint(s, pts[0])
t = min(timeit.repeat(lambda: [di.DwpPoint(s, p) for p in pts], number=1, repeat=int(sys.argv[1])))
print(t / len(pts))
"""


def jet_outputs(M):
    n = M.dim
    g = [M.metric[i][j] for i in range(n) for j in range(n)]
    dg = [ex.diff(e, c) for c in M.coords for e in g]
    ddg = [ex.diff(e, c) for c in M.coords for e in dg]
    return g + dg + ddg, M.coords


def workloads():
    sf = load_scenario(bundled_path("generic_4d_doubly_warped"))
    small = ([ex.parse("sin(x)*exp(-y^2) + sqrt(1 + x^2*y^2)")], ("x", "y"))
    return sf, {"scalar": small, "metric jet (4d)": jet_outputs(sf.scenario.ambient.product)}


def bench(outputs, variables, backend, repeat, rng):
    prog = ex.Program(outputs, variables, backend=vm.load_backend(backend))
    x = rng.uniform(0.2, 0.8, size=len(variables))
    xs = rng.uniform(0.2, 0.8, size=(1000, len(variables)))
    single = min(timeit.repeat(lambda: prog(x), number=200, repeat=repeat)) / 200
    batch = min(timeit.repeat(lambda: prog.batch(xs), number=1, repeat=repeat))
    return len(prog), single, batch


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = vm.available_backends()
    print(f"backends: {', '.join(backends)} (default {vm.BACKEND})")
    _, loads = workloads()
    rng = np.random.default_rng(0)
    print(f"{'workload':<18}{'backend':<9}{'instr':>7}{'call [us]':>12}{'batch 1000 [ms]':>17}")
    for name, (outs, variables) in loads.items():
        base = None
        for b in backends:
            n, single, batch = bench(outs, variables, b, args.repeat, rng)
            line = f"{name:<18}{b:<9}{n:>7}{single * 1e6:>12.2f}{batch * 1e3:>17.3f}"
            if base is None:
                base = (single, batch)
            else:
                line += f"   x{single / base[0]:.1f} / x{batch / base[1]:.1f} vs {backends[0]}"
            print(line)
    for b in backends:
        # fresh interpreter: compiled programs are cached per process
        env = dict(os.environ, DWARP_BACKEND=b)
        out = subprocess.run([sys.executable, "-c", SCENARIO_POINT, str(args.repeat)], env=env,
                             capture_output=True, text=True, check=True).stdout
        print(f"{'scenario point':<18}{b:<9}{'':>7}{float(out) * 1e6:>12.0f}")

if __name__ == "__main__":
    main()
