"""Throughput comparison of the compiled and pure-numpy amplitude kernels.

Run as a script:  python3 benchmarks/bench_kernels.py [n_points]

Evaluates the five-path Gaussian-product amplitude on a random cloud of
phase-space points with both backends, checks they agree to near machine
precision, and reports evaluations/second for each.
"""

from __future__ import annotations

import sys
import time

import numpy as np

from corrint._kernels import _py
from corrint.model import Body, SystemConfig
from corrint.wavegroup import WavegroupState

try:
    from corrint._kernels import _core
except ImportError:
    _core = None

BACKENDS = {"numpy": _py.eval_amplitude}
if _core is not None:
    BACKENDS["c"] = _core.eval_amplitude


def build_state() -> WavegroupState:
    config = SystemConfig(
        particle1=Body(mass=1.0, v0=1.0, x0=-60.0, sigma_x=18.0),
        mirror=Body(mass=1000.0, v0=-0.2, x0=0.0, sigma_x=2.0),
        particle2=Body(mass=1.0, v0=-1.0, x0=80.0, sigma_x=10.0),
    )
    return WavegroupState.from_config(config)


def bench(eval_amplitude, n_points: int, t: float = 50.0, repeats: int = 5):
    state = build_state()
    amps, maps, shifts, b, c, kbar = state.kernel_params(t)

    rng = np.random.default_rng(7)
    points = np.empty((n_points, 3))
    points[:, 0] = rng.uniform(-30.0, 10.0, n_points)
    points[:, 1] = rng.uniform(-14.0, -6.0, n_points)
    points[:, 2] = rng.uniform(20.0, 40.0, n_points)

    out = np.empty(n_points, dtype=np.complex128)
    eval_amplitude(points, amps, maps, shifts, b, c, kbar, out)  # warm up
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        eval_amplitude(points, amps, maps, shifts, b, c, kbar, out)
        best = min(best, time.perf_counter() - t0)
    return out.copy(), n_points / best


def main(argv=None) -> int:
    args = sys.argv[1:] if argv is None else argv
    n_points = int(args[0]) if args else 400_000

    if _core is None:
        print("compiled backend unavailable; benchmarking the fallback only")
    results, rates = {}, {}
    for name, fn in BACKENDS.items():
        results[name], rates[name] = bench(fn, n_points)
        print(f"{name:>6}: {rates[name] / 1e6:8.2f} M evals/s")
    if len(results) == 2:
        scale = np.abs(results["numpy"]).max()
        worst = np.abs(results["c"] - results["numpy"]).max() / scale
        print(f"agreement: max |c - numpy| / max|numpy| = {worst:.3e}")
        print(f"speedup: {rates['c'] / rates['numpy']:.2f}x")
        if worst > 1e-12:
            print("BACKEND MISMATCH — investigate before trusting the fast path")
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
