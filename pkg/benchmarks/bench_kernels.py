"""Compare the compiled kernel core against the pure-Python fallback.

Microbenchmarks call both implementations directly; the end-to-end row
runs the 84-day closed-loop simulation in a subprocess per backend
(selection happens at import, via PHN_PURE_PYTHON).

    python benchmarks/bench_kernels.py
"""

from __future__ import annotations

import os
import subprocess
import sys
import time

import numpy as np

from phn import kernels
from phn.kernels import pure


def timeit(fn, *args, repeat: int = 5, inner: int = 1) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / inner)
    return best


def bench_micro() -> list[tuple[str, float, float]]:
    rng = np.random.default_rng(0)
    rows = []

    series = rng.uniform(0, 150, 84)
    series_list = series.tolist()
    rows.append(
        (
            "trailing_mean(84d, w=42) x1000",
            timeit(lambda: [pure.trailing_mean(series_list, 42) for _ in range(1000)]),
            timeit(lambda: [kernels.trailing_mean(series, 42) for _ in range(1000)]),
        )
    )

    doses = rng.uniform(0, 150, 365)
    doses_list = doses.tolist()
    rows.append(
        (
            "impulse_response(365d)",
            timeit(lambda: pure.impulse_response(doses_list, 42.0)),
            timeit(lambda: kernels.impulse_response(doses, 42.0)),
        )
    )

    minutes = np.sort(rng.choice(1_000_000, 100_000, replace=False)).astype(np.int64)
    minutes_list = minutes.tolist()
    rows.append(
        (
            "group_minutes(100k active min)",
            timeit(lambda: pure.group_minutes(minutes_list, 2, 5)),
            timeit(lambda: kernels.group_minutes(minutes, 2, 5)),
        )
    )
    return rows


def bench_sim(backend_env: dict) -> float:
    code = (
        "import time; from phn import sim; "
        "t0=time.perf_counter(); "
        "sim.run_closed_loop(sim.default_virtual_user(), sim.SimConfig(days=84, seed=0)); "
        "print(time.perf_counter()-t0)"
    )
    env = dict(os.environ)
    env.update(backend_env)
    out = subprocess.run(
        [sys.executable, "-c", code], capture_output=True, text=True, env=env, check=True
    )
    return float(out.stdout.strip())


def main() -> None:
    if kernels.BACKEND != "compiled":
        print("note: compiled backend unavailable; comparing pure against itself")
    print(f"{'benchmark':<34} {'pure':>10} {'compiled':>10} {'speedup':>8}")
    for name, t_pure, t_fast in bench_micro():
        print(f"{name:<34} {t_pure*1e3:>8.2f}ms {t_fast*1e3:>8.2f}ms {t_pure/t_fast:>7.1f}x")
    t_pure = bench_sim({"PHN_PURE_PYTHON": "1"})
    env = dict(os.environ)
    env.pop("PHN_PURE_PYTHON", None)
    t_fast = bench_sim({})
    print(f"{'closed loop 84d (subprocess)':<34} {t_pure*1e3:>8.0f}ms {t_fast*1e3:>8.0f}ms "
          f"{t_pure/t_fast:>7.1f}x")


if __name__ == "__main__":
    main()
