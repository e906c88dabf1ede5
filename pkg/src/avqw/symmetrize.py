"""Symmetrizability of a state-indexed channel family.

A family {W_t} is symmetrizable when some stochastic map tau from input
symbols to states makes the two orderings of (input, map) coincide:
sum_t tau(t|a) W_t(a') equals sum_t tau(t|a') W_t(a) for every input pair.
The residual of a candidate tau is the largest trace-norm defect over
input pairs; its minimum over all tau is the F functional, which is zero
exactly on symmetrizable families.

The solver minimizes a smooth convex surrogate (sum of squared Frobenius
defects) by projected gradient descent, then polishes the true residual
with projected subgradient steps.  Restarts cover the nonsmooth polish
stage; the surrogate stage alone is reliable for zero detection.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .channels import ChannelFamily
from .config import DEFAULT_CONFIG, RunConfig
from .errors import AlphabetMismatch, GridTooLarge, LengthMismatch, OutOfRange, ValidationError

SYMMETRIZABLE = "symmetrizable"
NOT_SYMMETRIZABLE = "not_symmetrizable"
INCONCLUSIVE = "inconclusive"


@dataclass(eq=False)
class SymmetrizingMap:
    """Stochastic map from input symbols to states; rows are distributions."""

    inputs: tuple[str, ...]
    states: tuple[str, ...]
    table: np.ndarray  # (n_inputs, n_states)

    def __post_init__(self):
        t = np.asarray(self.table, dtype=np.float64).copy()
        if t.shape != (len(self.inputs), len(self.states)):
            raise LengthMismatch(f"table shape {t.shape} does not match alphabets")
        low = float(t.min())
        if low < -DEFAULT_CONFIG.trace_tol:
            raise OutOfRange("negative map weight", deviation=-low)
        t = np.clip(t, 0.0, None)
        dev = float(np.max(np.abs(t.sum(axis=1) - 1.0)))
        if dev > DEFAULT_CONFIG.trace_tol:
            raise ValidationError("map rows do not sum to one", deviation=dev)
        self.table = t


@dataclass
class SolverTrace:
    restarts: int
    iterations: int
    grad_norm: float


@dataclass(eq=False)
class SymmetrizabilityReport:
    residual: float
    tau: SymmetrizingMap
    decision: str
    f_value: float
    trace: SolverTrace
    converged: bool

    def to_dict(self) -> dict:
        return {
            "residual": self.residual,
            "f_value": self.f_value,
            "decision": self.decision,
            "converged": self.converged,
            "tau": {
                "inputs": list(self.tau.inputs),
                "states": list(self.tau.states),
                "table": [[float(v) for v in row] for row in self.tau.table],
            },
            "solver": {
                "restarts": self.trace.restarts,
                "iterations": self.trace.iterations,
                "grad_norm": self.trace.grad_norm,
            },
        }


def _tau_table(tau, n_inputs: int, n_states: int) -> np.ndarray:
    if isinstance(tau, SymmetrizingMap):
        table = tau.table
    else:
        table = np.asarray(tau, dtype=np.float64)
    if table.shape != (n_inputs, n_states):
        raise LengthMismatch(f"tau shape {table.shape}, expected {(n_inputs, n_states)}")
    return table


def residual(family: ChannelFamily, tau) -> float:
    """Largest pairwise trace-norm defect of tau on the family."""
    table = _tau_table(tau, len(family.inputs), family.size)
    if len(family.inputs) < 2:
        return 0.0
    value, _, _ = kernels.residual_max(family.stack(), table)
    return float(value)


def residual_classical(channels, states, tau) -> float:
    """Same defect for classical channels, in vector l1 norm.

    `channels` is one ClassicalChannel per state, sharing both alphabets.
    Diagonal quantum families reduce to this exactly.
    """
    channels = tuple(channels)
    states = tuple(states)
    if len(channels) != len(states):
        raise LengthMismatch(f"{len(states)} states but {len(channels)} channels")
    first = channels[0]
    for ch in channels[1:]:
        if ch.inputs != first.inputs or ch.output_labels != first.output_labels:
            raise AlphabetMismatch("classical family members use different alphabets")
    table = _tau_table(tau, len(first.inputs), len(states))
    n_a = len(first.inputs)
    if n_a < 2:
        return 0.0
    stack = np.stack([ch.matrix for ch in channels])  # (T, nA, nB)
    mixed = np.einsum("at,tcb->acb", table, stack)  # rows of tau mix the family
    best = 0.0
    for i in range(n_a):
        for j in range(i + 1, n_a):
            defect = float(np.abs(mixed[i, j] - mixed[j, i]).sum())
            best = max(best, defect)
    return best


def _vertex_patterns(n_inputs: int, n_states: int, cap: int):
    """Deterministic list of vertex assignments: cyclic shifts first, then
    constant rows.  These hit the standard witnesses exactly."""
    seen = set()
    patterns = []
    for k in range(n_states):
        pat = tuple((a + k) % n_states for a in range(n_inputs))
        if pat not in seen:
            seen.add(pat)
            patterns.append(pat)
    for t in range(n_states):
        pat = (t,) * n_inputs
        if pat not in seen:
            seen.add(pat)
            patterns.append(pat)
    return patterns[:cap]


def _starts(family: ChannelFamily, cfg: RunConfig, extra):
    n_a = len(family.inputs)
    n_t = family.size
    starts = []
    if extra:
        for table in extra:
            starts.append(_tau_table(table, n_a, n_t).copy())
    starts.append(np.full((n_a, n_t), 1.0 / n_t))
    for pat in _vertex_patterns(n_a, n_t, cfg.restarts):
        tab = np.zeros((n_a, n_t))
        for a, t in enumerate(pat):
            tab[a, t] = 1.0
        starts.append(tab)
    rng = np.random.default_rng([cfg.seed, 0x5EED])
    while len(starts) < max(cfg.restarts, len(starts)):
        raw = rng.standard_exponential((n_a, n_t))
        starts.append(raw / raw.sum(axis=1, keepdims=True))
    return starts[: max(cfg.restarts, len(extra or []) + 1)]


def _run_start(stack, tau0, cfg: RunConfig):
    tau1, sval, iters, gm = kernels.surrogate_descent(
        stack, tau0, cfg.surrogate_iters, cfg.surrogate_gtol
    )
    tau2, val = kernels.polish_descent(stack, tau1, cfg.polish_iters)
    return val, tau2, iters, gm


def solve_symmetrizability(
    family: ChannelFamily, cfg: RunConfig = DEFAULT_CONFIG, extra_starts=None
) -> SymmetrizabilityReport:
    """Minimize the residual over stochastic maps and classify the family.

    Residuals at or below cfg.sym_tol count as symmetrizable; the band up
    to cfg.inconclusive_factor times that is declared inconclusive.  The
    report's f_value is the best residual found (an upper bound on F).
    """
    n_a = len(family.inputs)
    n_t = family.size
    if n_t == 1 or n_a == 1:
        table = np.ones((n_a, n_t)) / n_t
        best = residual(family, table)
        return _report(family, table, best, SolverTrace(0, 0, 0.0), True, cfg)

    stack = family.stack()
    starts = _starts(family, cfg, extra_starts)
    results = []
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            futures = [pool.submit(_run_start, stack, s, cfg) for s in starts]
            results = [f.result() for f in futures]
    else:
        results = [_run_start(stack, s, cfg) for s in starts]

    best_idx = 0
    for i in range(1, len(results)):
        if results[i][0] < results[best_idx][0]:
            best_idx = i
    best_val, best_tau, _, best_gm = results[best_idx]
    total_iters = sum(r[2] for r in results) + cfg.polish_iters * len(results)
    converged = results[best_idx][2] < cfg.surrogate_iters or best_val <= cfg.sym_tol
    trace = SolverTrace(len(starts), total_iters, float(best_gm))
    return _report(family, best_tau, float(best_val), trace, converged, cfg)


def _report(family, table, value, trace, converged, cfg) -> SymmetrizabilityReport:
    if value <= cfg.sym_tol:
        decision = SYMMETRIZABLE
    elif value <= cfg.sym_tol * cfg.inconclusive_factor:
        decision = INCONCLUSIVE
    else:
        decision = NOT_SYMMETRIZABLE
    tau = SymmetrizingMap(family.inputs, family.states, table)
    return SymmetrizabilityReport(
        residual=value,
        tau=tau,
        decision=decision,
        f_value=value,
        trace=trace,
        converged=converged,
    )


def f_functional(family: ChannelFamily, cfg: RunConfig = DEFAULT_CONFIG) -> float:
    """Best upper bound on the symmetrizability functional F."""
    return solve_symmetrizability(family, cfg).residual


def grid_oracle(family: ChannelFamily, resolution: int, cfg: RunConfig = DEFAULT_CONFIG) -> float:
    """Exhaustive minimum of the residual over a product simplex grid.

    Independent of the solver; the grid nests under resolution doubling,
    so values are monotone along doubling chains.  Budget-guarded by
    cfg.max_grid_points.
    """
    n_a = len(family.inputs)
    n_t = family.size
    if n_a < 2:
        return 0.0
    if n_t == 1:
        return residual(family, np.ones((n_a, 1)))
    per_row = kernels.count_simplex_grid(n_t, resolution)
    total = per_row**n_a
    if total > cfg.max_grid_points:
        raise GridTooLarge(
            f"grid needs {total} points, budget is {cfg.max_grid_points}; "
            "lower the resolution or raise max_grid_points"
        )
    rows = kernels.simplex_grid(n_t, resolution)
    mixed = kernels.mix_grid(family.stack(), rows)
    value, _ = kernels.grid_scan(mixed)
    return float(value)
