"""Time the compiled and pure-Python kernels on the same workloads.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--scale 1.0]
"""
import argparse
import math
import time

import numpy as np

from seqmc.kernels import available_backends


def _time(fn, repeat):
    best = math.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def workloads(scale):
    n_csm = int(100_000 * scale)
    n_sim = int(50_000 * scale)
    alpha, eps = 0.05, 1e-3

    def csm(mod):
        return lambda: mod.csm_bounds(1, n_csm, alpha, math.log(eps), -1, 1)

    def simctest(mod):
        seq = eps * np.arange(1, n_sim + 1) / (np.arange(1, n_sim + 1) + 1000.0)
        return lambda: mod.simctest_extend(alpha, seq, 0, np.array([1.0]), 0, 0.0, 0.0)

    def propagate(mod):
        lo, up = available_backends()["python"].csm_bounds(1, n_sim, alpha, math.log(eps), -1, 1)
        return lambda: mod.propagate(lo, up, alpha, 0, n_sim, np.array([1.0]), 0)

    return {
        f"csm_bounds n={n_csm}": csm,
        f"simctest_extend n={n_sim}": simctest,
        f"propagate n={n_sim}": propagate,
    }


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float), rtol=0, atol=1e-12)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=float, default=1.0)
    args = ap.parse_args()
    backends = available_backends()
    if "cython" not in backends:
        print("compiled backend not built; timing the Python kernels only")
    print(f"{'kernel':30s}" + "".join(f"{name:>12s}" for name in sorted(backends)) + "     speedup  agree")
    for label, make in workloads(args.scale).items():
        times, outs = {}, {}
        for name, mod in sorted(backends.items()):
            times[name], outs[name] = _time(make(mod), args.repeat)
        row = f"{label:30s}" + "".join(f"{times[n]:11.4f}s" for n in sorted(backends))
        if "cython" in times:
            agree = _same(outs["cython"], outs["python"])
            row += f"  {times['python'] / times['cython']:9.1f}x  {'yes' if agree else 'NO'}"
        print(row)


if __name__ == "__main__":
    main()
