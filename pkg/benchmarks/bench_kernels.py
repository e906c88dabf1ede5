"""Timing comparison of the compiled and pure-numpy kernel backends.

Each task runs in a fresh subprocess so the backend choice (env var
AVQW_PURE_NUMPY) is fixed at import time, exactly as a user would see
it.  Compilation happens inside a warmup call and is excluded from the
timed region.

Run:  python3 benchmarks/bench_kernels.py [--repeats 3]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time


def _family(n_states: int, n_inputs: int, dim: int, seed: int):
    import numpy as np

    from avqw.channels import ChannelFamily, CQChannel
    from avqw.quantum import random_density

    rng = np.random.default_rng(seed)
    inputs = tuple(str(a) for a in range(n_inputs))
    chans = []
    for _ in range(n_states):
        outs = np.stack([random_density(dim, rng).mat for _ in inputs])
        chans.append(CQChannel(inputs, outs))
    return ChannelFamily(tuple(f"t{t}" for t in range(n_states)), tuple(chans))


def task_grid(repeats: int) -> float:
    from avqw import kernels
    from avqw.config import DEFAULT_CONFIG
    from avqw.symmetrize import grid_oracle

    fam = _family(3, 3, 2, seed=42)
    grid_oracle(fam, 6, DEFAULT_CONFIG)  # warmup / compile
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        grid_oracle(fam, 16, DEFAULT_CONFIG)
        best = min(best, time.perf_counter() - t0)
    return best


def task_solver(repeats: int) -> float:
    from avqw.config import DEFAULT_CONFIG
    from avqw.symmetrize import solve_symmetrizability

    fam = _family(4, 4, 3, seed=7)
    solve_symmetrizability(fam, DEFAULT_CONFIG.replace(restarts=2))  # warmup
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        solve_symmetrizability(fam, DEFAULT_CONFIG)
        best = min(best, time.perf_counter() - t0)
    return best


def task_trace_norm(repeats: int) -> float:
    import numpy as np

    from avqw import kernels

    rng = np.random.default_rng(3)
    g = rng.standard_normal((4096, 4, 4)) + 1j * rng.standard_normal((4096, 4, 4))
    batch = g + np.swapaxes(g.conj(), 1, 2)
    kernels.batch_trace_norm_herm(batch[:8])  # warmup
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        kernels.batch_trace_norm_herm(batch)
        best = min(best, time.perf_counter() - t0)
    return best


TASKS = {"grid": task_grid, "solver": task_solver, "trace_norm": task_trace_norm}


def _worker(name: str, repeats: int) -> None:
    from avqw import kernels

    elapsed = TASKS[name](repeats)
    print(json.dumps({"task": name, "backend": kernels.BACKEND, "seconds": elapsed}))


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--worker", choices=sorted(TASKS), help=argparse.SUPPRESS)
    args = parser.parse_args()
    if args.worker:
        _worker(args.worker, args.repeats)
        return 0

    rows = []
    for task in sorted(TASKS):
        for pure in ("0", "1"):
            env = dict(os.environ, AVQW_PURE_NUMPY=pure)
            out = subprocess.run(
                [sys.executable, __file__, "--worker", task, "--repeats", str(args.repeats)],
                env=env,
                capture_output=True,
                text=True,
                check=True,
            )
            rows.append(json.loads(out.stdout.strip().splitlines()[-1]))

    print(f"{'task':<12} {'backend':<8} {'best seconds':>12}")
    by_task = {}
    for row in rows:
        print(f"{row['task']:<12} {row['backend']:<8} {row['seconds']:>12.4f}")
        by_task.setdefault(row["task"], {})[row["backend"]] = row["seconds"]
    for task, times in sorted(by_task.items()):
        if len(times) == 2 and min(times.values()) > 0:
            fast, slow = sorted(times.items(), key=lambda kv: kv[1])
            print(f"{task}: {fast[0]} is {slow[1] / fast[1]:.1f}x faster than {slow[0]}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
