"""Timing comparison of the compiled update kernels vs the Python fallback.

Run:  python3 benchmarks/bench_kernels.py [--rows N] [--features M] [--epochs E]

The per-sample loops dominate benchmark-harness runtime (per-sample
learners over many epochs and cells), which is why they live in the
extension; this script quantifies the gap on a representative workload.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from driftreg import _kernels


def time_call(fn, *args, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        started = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - started)
    return best


def bench(rows: int, features: int, epochs: int) -> None:
    rng = np.random.default_rng(0)
    xb = np.ascontiguousarray(
        np.column_stack([np.ones(rows), rng.uniform(-1, 1, size=(rows, features))])
    )
    y = np.ascontiguousarray(
        xb[:, 1:] @ rng.normal(size=features) + rng.normal(size=rows)
    )
    d = features + 1

    workloads = {
        f"gd_pass x{epochs} (sgd epochs)": lambda mod: [
            mod.gd_pass(xb, y, np.zeros(d), 0.01, 0.0, mod.PENALTY_NONE)
            for _ in range(epochs)
        ],
        f"gd_pass x{epochs} (ridge)": lambda mod: [
            mod.gd_pass(xb, y, np.zeros(d), 0.01, 0.05, mod.PENALTY_L2)
            for _ in range(epochs)
        ],
        "pa_pass (soft)": lambda mod: mod.pa_pass(
            xb, y, np.zeros(d), 0.01, 0.01, mod.PA_SOFT
        ),
        "rls_pass": lambda mod: mod.rls_pass(
            xb, y, np.zeros(d), np.eye(d) * 100.0, 0.99
        ),
    }

    available = _kernels.available_backends()
    print(f"backends available: {available}")
    print(f"workload: rows={rows} features={features} epochs={epochs}")
    print(f"{'kernel':34s} " + " ".join(f"{b:>12s}" for b in available) + "  speedup")
    for label, runner in workloads.items():
        timings = {}
        for backend in available:
            module = _kernels.get_backend(backend)
            timings[backend] = time_call(runner, module)
        row = f"{label:34s} " + " ".join(
            f"{timings[b] * 1e3:10.2f}ms" for b in available
        )
        if "compiled" in timings and "python" in timings:
            row += f"  {timings['python'] / timings['compiled']:7.1f}x"
        print(row)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rows", type=int, default=20_000)
    parser.add_argument("--features", type=int, default=20)
    parser.add_argument("--epochs", type=int, default=2)
    args = parser.parse_args()
    bench(args.rows, args.features, args.epochs)


if __name__ == "__main__":
    main()
