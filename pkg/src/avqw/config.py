"""Run configuration.

All numeric tolerances and size caps live here so that every module reads
the same constants.  The defaults are the documented contract; tests pin
them explicitly where a criterion depends on an exact value.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass


@dataclass
class RunConfig:
    # density-matrix validation
    herm_tol: float = 1e-10
    psd_tol: float = 1e-10
    trace_tol: float = 1e-10
    repair_tol: float = 1e-8          # deviations below this are repaired, above rejected
    entropy_floor: float = 1e-12      # eigenvalues below this count as zero in entropies
    dim_cap: int = 4096               # largest matrix dimension any operation will build

    # symmetrizability solver
    sym_tol: float = 1e-7             # residual at or below this counts as symmetrizable
    inconclusive_factor: float = 10.0  # band (sym_tol, factor*sym_tol] is inconclusive
    restarts: int = 16
    surrogate_iters: int = 3000
    surrogate_gtol: float = 1e-13
    polish_iters: int = 800
    max_grid_points: int = 5_000_000

    # capacity evaluation
    q_grid: int = 64                  # simplex grid resolution for the adversary mixture
    q_refine_iters: int = 80
    p_seed_grid: int = 64             # input-distribution grid used to seed the ascent
    p_restarts: int = 8               # ascent starts over the input distribution
    rate_iters: int = 80
    fd_step: float = 1e-5
    max_n: int = 6
    max_patterns: int = 4096
    positive_rate_tol: float = 1e-4   # rates above this count as strictly positive

    # code simulation
    max_dim: int = 4096               # cap on n-fold output dimension
    pgm_support_cutoff: float = 1e-10
    eig_group_tol: float = 1e-10      # eigenvalues closer than this share a spectral label

    # stochastic work
    seed: int = 0
    threads: int = 1

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


DEFAULT_CONFIG = RunConfig()


def threads_from_env(default: int = 1) -> int:
    """Parallelism cap read from AVQW_THREADS; non-positive values mean 1."""
    raw = os.environ.get("AVQW_THREADS", "")
    try:
        value = int(raw)
    except ValueError:
        return default
    return max(1, value)
