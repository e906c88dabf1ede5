"""Secrecy-rate evaluation for arbitrarily varying wiretap channels.

The headline quantity is the single-letter lower-bound proxy

    rate(p) = min_q chi(p; legal mixed by q) - max_t chi(p; eaves at t)

optimized over input distributions p.  Block evaluation at n >= 2 keeps
the product structure (a shared adversary mixture q on the legal side, a
worst state pattern on the eavesdropper side) and, when a preprocessing
map is supplied, preprocesses the first n-1 slots while leaving the last
slot raw, which preserves non-symmetrizability of the legal family.

Deterministic capacity obeys a dichotomy: a symmetrizable legal family
forces rate zero no matter the optimizer's value, so reports carry both
the raw optimized value (valid under shared randomness) and the zeroed
deterministic estimate.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .channels import (
    AVWiretapChannel,
    ChannelFamily,
    ClassicalChannel,
    CQChannel,
    ProbabilityDistribution,
    hat_precompose,
    precompose_family,
    tensor_channels,
)
from .config import DEFAULT_CONFIG, RunConfig
from .errors import AlphabetMismatch, EnumerationTooLarge, OutOfRange
from .quantum import batch_von_neumann, random_density
from .symmetrize import (
    NOT_SYMMETRIZABLE,
    SYMMETRIZABLE,
    SymmetrizabilityReport,
    solve_symmetrizability,
)

_GRID_CAP = 20_000
_SEED_CAP = 2_000


# ---------------------------------------------------------------------------
# Holevo quantities
# ---------------------------------------------------------------------------


def _chi_weights(p_w: np.ndarray, outputs: np.ndarray, cfg: RunConfig) -> float:
    """chi of the ensemble {p(a), outputs[a]}, clamped to [0, log2 dim]."""
    avg = np.einsum("a,ars->rs", p_w, outputs)
    ents = batch_von_neumann(np.concatenate([avg[None, :, :], outputs]), cfg)
    value = float(ents[0] - p_w @ ents[1:])
    top = math.log2(outputs.shape[1]) if outputs.shape[1] > 1 else 0.0
    return min(max(value, 0.0), top)


def holevo_chi(p: ProbabilityDistribution, channel, cfg: RunConfig = DEFAULT_CONFIG) -> float:
    """Holevo information of the channel ensemble under input distribution p."""
    if p.support != channel.inputs:
        raise AlphabetMismatch(f"distribution over {p.support} vs inputs {channel.inputs}")
    return _chi_weights(p.weights, channel.outputs, cfg)


def conditional_entropy(channel, p: ProbabilityDistribution, cfg: RunConfig = DEFAULT_CONFIG) -> float:
    """Average output entropy sum_a p(a) S(W(a))."""
    if p.support != channel.inputs:
        raise AlphabetMismatch(f"distribution over {p.support} vs inputs {channel.inputs}")
    ents = batch_von_neumann(channel.outputs, cfg)
    return float(p.weights @ ents)


# ---------------------------------------------------------------------------
# simplex search helpers
# ---------------------------------------------------------------------------


def _capped_grid(n: int, resolution: int, cap: int) -> np.ndarray:
    res = max(1, resolution)
    while res > 1 and kernels.count_simplex_grid(n, res) > cap:
        res //= 2
    return kernels.simplex_grid(n, res)


def _project_point(x: np.ndarray) -> np.ndarray:
    return kernels.project_rows(x[None, :])[0]


def _renorm_clip(x: np.ndarray) -> np.ndarray:
    y = np.clip(x, 0.0, None)
    s = y.sum()
    return y / s if s > 0 else np.full_like(y, 1.0 / len(y))


def _fd_gradient(fun, x: np.ndarray, fd_step: float) -> np.ndarray:
    """Central differences along the simplex tangent directions e_i - e_last."""
    n = len(x)
    g = np.zeros(n)
    for i in range(n - 1):
        d = np.zeros(n)
        d[i] = 1.0
        d[n - 1] = -1.0
        up = fun(_renorm_clip(x + fd_step * d))
        dn = fun(_renorm_clip(x - fd_step * d))
        slope = (up - dn) / (2.0 * fd_step)
        g[i] += slope
        g[n - 1] -= slope
    return g


def _descend_simplex(fun, x0: np.ndarray, iters: int, cfg: RunConfig):
    """Projected-gradient minimization of fun over one simplex."""
    x = _project_point(np.asarray(x0, dtype=np.float64))
    val = fun(x)
    step = 0.25
    for _ in range(iters):
        g = _fd_gradient(fun, x, cfg.fd_step)
        gnorm_sq = float(g @ g)
        if gnorm_sq <= 1e-20:
            break
        moved = False
        for _ in range(30):
            cand = _project_point(x - step * g)
            cv = fun(cand)
            decrease = 1e-4 * float(g @ (x - cand))
            if cv <= val - decrease - 1e-15 and cv < val:
                gain = val - cv
                x, val = cand, cv
                step = min(step * 1.5, 16.0)
                moved = True
                break
            step *= 0.5
        if not moved or gain < 1e-12:
            break
    return x, val


def _ascend_simplex(fun, x0: np.ndarray, iters: int, cfg: RunConfig):
    x, neg = _descend_simplex(lambda w: -fun(w), x0, iters, cfg)
    return x, -neg


# ---------------------------------------------------------------------------
# legal and eavesdropper terms
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class LegalTerm:
    value: float
    q: ProbabilityDistribution


@dataclass(eq=False)
class EavesTerm:
    value: float  # total over the block
    pattern: tuple[str, ...]
    per_letter: list[float]  # value(m)/m for m = 1..n


def _legal_value_grid(p_w: np.ndarray, slots, cfg: RunConfig):
    """Vectorized block value over a q grid; slots are (mult, stack) pairs."""
    n_t = slots[0][1].shape[0]
    rows = _capped_grid(n_t, cfg.q_grid, _GRID_CAP)
    total = np.zeros(rows.shape[0])
    d = slots[0][1].shape[2]
    top = math.log2(d) if d > 1 else 0.0
    for mult, stack in slots:
        mixed = np.einsum("gt,tars->gars", rows, stack, optimize=True)
        avg = np.einsum("a,gars->grs", p_w, mixed, optimize=True)
        s_avg = batch_von_neumann(avg, cfg)
        cond = batch_von_neumann(mixed, cfg) @ p_w
        total += mult * np.clip(s_avg - cond, 0.0, top)
    k = int(np.argmin(total))
    return float(total[k]), rows[k].copy()


def _legal_value_at(p_w: np.ndarray, slots, q_w: np.ndarray, cfg: RunConfig) -> float:
    value = 0.0
    for mult, stack in slots:
        outputs = np.einsum("t,tars->ars", q_w, stack)
        value += mult * _chi_weights(p_w, outputs, cfg)
    return value


def _min_over_q(p_w: np.ndarray, slots, cfg: RunConfig, refine_iters: int):
    value, q = _legal_value_grid(p_w, slots, cfg)
    if refine_iters > 0 and len(q) > 1:
        q2, v2 = _descend_simplex(lambda w: _legal_value_at(p_w, slots, w, cfg), q, refine_iters, cfg)
        if v2 < value:
            value, q = v2, q2
    return value, q


def legal_term(
    p: ProbabilityDistribution, family: ChannelFamily, cfg: RunConfig = DEFAULT_CONFIG
) -> LegalTerm:
    """min over adversary mixtures q of chi(p; family mixed by q)."""
    if p.support != family.inputs:
        raise AlphabetMismatch(f"distribution over {p.support} vs inputs {family.inputs}")
    value, q_w = _min_over_q(p.weights, [(1.0, family.stack())], cfg, cfg.q_refine_iters)
    return LegalTerm(value, ProbabilityDistribution(family.states, q_w))


def _slot_chi_tables(p_w: np.ndarray, slot_families, cfg: RunConfig):
    tables = []
    for fam in slot_families:
        stack = fam.stack()
        tables.append(np.array([_chi_weights(p_w, stack[t], cfg) for t in range(stack.shape[0])]))
    return tables


def _max_over_patterns(chi_tables, states, cfg: RunConfig):
    """Exhaustive maximum of sum_i chi_i[t_i] over state patterns."""
    n = len(chi_tables)
    n_t = len(states)
    if n_t**n > cfg.max_patterns:
        raise EnumerationTooLarge(
            f"{n_t ** n} state patterns exceed the budget {cfg.max_patterns}"
        )
    best = -np.inf
    best_pat = None
    for pat in itertools.product(range(n_t), repeat=n):
        value = 0.0
        for i in range(n):
            value += chi_tables[i][pat[i]]
        if value > best:
            best = value
            best_pat = pat
    return float(best), tuple(states[t] for t in best_pat)


def eaves_term(
    p: ProbabilityDistribution, family: ChannelFamily, n: int, cfg: RunConfig = DEFAULT_CONFIG
) -> EavesTerm:
    """Worst-pattern block chi for the eavesdropper at block length n.

    Product inputs make the block value additive over slots, so each
    pattern's value is the sum of its single-letter terms; the enumeration
    over patterns is exhaustive.  per_letter[m-1] holds value(m)/m.
    """
    if p.support != family.inputs:
        raise AlphabetMismatch(f"distribution over {p.support} vs inputs {family.inputs}")
    if n < 1:
        raise OutOfRange(f"block length {n} below 1")
    chi = _slot_chi_tables(p.weights, [family], cfg)[0]
    per_letter = []
    final = None
    for m in range(1, n + 1):
        value, pattern = _max_over_patterns([chi] * m, family.states, cfg)
        per_letter.append(value / m)
        if m == n:
            final = (value, pattern)
    return EavesTerm(final[0], final[1], per_letter)


# ---------------------------------------------------------------------------
# secrecy rate at a fixed input distribution
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class RateObjective:
    p: ProbabilityDistribution
    preprocess: ClassicalChannel | None
    n: int
    legal_term: float
    eaves_term: float
    raw_difference: float
    rate: float
    q: ProbabilityDistribution
    worst_pattern: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "p": {"labels": list(self.p.support), "weights": [float(w) for w in self.p.weights]},
            "preprocess": None
            if self.preprocess is None
            else [[float(v) for v in row] for row in self.preprocess.matrix],
            "n": self.n,
            "legal_term": self.legal_term,
            "eaves_term": self.eaves_term,
            "raw_difference": self.raw_difference,
            "rate": self.rate,
            "q": {"labels": list(self.q.support), "weights": [float(w) for w in self.q.weights]},
            "worst_pattern": list(self.worst_pattern),
        }


def _block_slots(pair: AVWiretapChannel, t_u: ClassicalChannel | None, n: int):
    """(legal q-slots, eavesdropper per-slot families) for block length n."""
    legal = pair.legal_family
    eaves = pair.eaves_family
    if t_u is None:
        legal_slots = [(float(n), legal.stack())]
        eaves_slots = [eaves] * n
        return legal_slots, eaves_slots
    if n == 1:
        legal_slots = [(1.0, precompose_family(legal, t_u).stack())]
        eaves_slots = [precompose_family(eaves, t_u)]
        return legal_slots, eaves_slots
    hat_legal = hat_precompose(legal, t_u, n)
    hat_eaves = hat_precompose(eaves, t_u, n)
    legal_slots = [(float(n - 1), hat_legal.head.stack()), (1.0, hat_legal.tail.stack())]
    eaves_slots = [hat_eaves.head] * (n - 1) + [hat_eaves.tail]
    return legal_slots, eaves_slots


def secrecy_rate(
    pair: AVWiretapChannel,
    p: ProbabilityDistribution,
    t_u: ClassicalChannel | None = None,
    n: int = 1,
    cfg: RunConfig = DEFAULT_CONFIG,
) -> RateObjective:
    """Per-letter secrecy rate proxy at one input distribution.

    Negative differences are reported as rate 0 with the raw difference
    retained.
    """
    if n < 1:
        raise OutOfRange(f"block length {n} below 1")
    expected = pair.inputs if t_u is None else t_u.inputs
    if p.support != expected:
        raise AlphabetMismatch(f"distribution over {p.support} vs inputs {expected}")
    legal_slots, eaves_slots = _block_slots(pair, t_u, n)
    legal_total, q_w = _min_over_q(p.weights, legal_slots, cfg, cfg.q_refine_iters)
    chi_tables = _slot_chi_tables(p.weights, eaves_slots, cfg)
    eaves_total, pattern = _max_over_patterns(chi_tables, pair.states, cfg)
    legal_pl = legal_total / n
    eaves_pl = eaves_total / n
    raw = legal_pl - eaves_pl
    return RateObjective(
        p=p,
        preprocess=t_u,
        n=n,
        legal_term=legal_pl,
        eaves_term=eaves_pl,
        raw_difference=raw,
        rate=max(raw, 0.0),
        q=ProbabilityDistribution(pair.states, q_w),
        worst_pattern=pattern,
    )


def rate_trend(
    pair: AVWiretapChannel,
    p: ProbabilityDistribution,
    t_u: ClassicalChannel | None,
    n_max: int,
    cfg: RunConfig = DEFAULT_CONFIG,
) -> list[RateObjective]:
    """Per-letter terms for every block length up to n_max."""
    if n_max > cfg.max_n:
        raise EnumerationTooLarge(f"block length {n_max} exceeds the budget {cfg.max_n}")
    return [secrecy_rate(pair, p, t_u, n, cfg) for n in range(1, n_max + 1)]


# ---------------------------------------------------------------------------
# optimization over the input distribution
# ---------------------------------------------------------------------------


def _objective_fast(pair: AVWiretapChannel, cfg: RunConfig):
    """Raw difference at n = 1 with a cheap inner q search (coarse grid
    plus a short refine); used inside the finite-difference ascent."""
    legal_stack = pair.legal_family.stack()
    eaves_stack = pair.eaves_family.stack()
    coarse = cfg.replace(q_grid=max(8, cfg.q_grid // 4))

    def fun(p_w: np.ndarray) -> float:
        legal, _ = _min_over_q(p_w, [(1.0, legal_stack)], coarse, 12)
        chi = np.array(
            [_chi_weights(p_w, eaves_stack[t], cfg) for t in range(eaves_stack.shape[0])]
        )
        return legal - float(chi.max())

    return fun


def _seed_points(pair: AVWiretapChannel, cfg: RunConfig, fun) -> list[np.ndarray]:
    """Start list: uniform, vertices, best coarse-grid points, random fill."""
    n_a = len(pair.inputs)
    starts = [np.full(n_a, 1.0 / n_a)]
    for i in range(n_a):
        v = np.zeros(n_a)
        v[i] = 1.0
        starts.append(v)
    if kernels.count_simplex_grid(n_a, 8) <= _SEED_CAP:
        grid = _capped_grid(n_a, cfg.p_seed_grid, _SEED_CAP)
        values = np.array([fun(row) for row in grid])
        order = np.argsort(-values, kind="stable")
        for k in order[:3]:
            starts.append(grid[k].copy())
    rng = np.random.default_rng([cfg.seed, 0xA5CE])
    limit = max(cfg.p_restarts, n_a + 1)
    while len(starts) < limit:
        raw = rng.standard_exponential(n_a)
        starts.append(raw / raw.sum())
    return starts[:limit]


@dataclass(eq=False)
class CapacityReport:
    best: RateObjective
    decision: str
    residual: float
    deterministic_capacity_estimate: float
    randomness_assisted_estimate: float
    sym_report: SymmetrizabilityReport
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "best": self.best.to_dict(),
            "decision": self.decision,
            "residual": self.residual,
            "deterministic_capacity_estimate": self.deterministic_capacity_estimate,
            "randomness_assisted_estimate": self.randomness_assisted_estimate,
            "symmetrizability": self.sym_report.to_dict(),
            "meta": self.meta,
        }


def optimize_rate(
    pair: AVWiretapChannel,
    cfg: RunConfig = DEFAULT_CONFIG,
    optimize_preprocess: bool = False,
    extra_tau_starts=None,
) -> CapacityReport:
    """Multi-start ascent of the n = 1 rate over input distributions.

    The optimized value is the randomness-assisted estimate; the
    deterministic estimate is zeroed whenever the legal family is
    symmetrizable (capacity dichotomy).
    """
    sym = solve_symmetrizability(pair.legal_family, cfg, extra_starts=extra_tau_starts)
    fun = _objective_fast(pair, cfg)
    starts = _seed_points(pair, cfg, fun)
    best_p = None
    best_val = -np.inf
    for x0 in starts:
        x, val = _ascend_simplex(fun, x0, cfg.rate_iters, cfg)
        if val > best_val:
            best_val = val
            best_p = x
    candidates = [best_p]
    if optimize_preprocess:
        cand = _preprocess_search(pair, best_p, cfg)
        if cand is not None:
            candidates.append(cand)
    best_obj = None
    for cand in candidates:
        if isinstance(cand, tuple):
            p_w, t_u = cand
            obj = secrecy_rate(
                pair, ProbabilityDistribution(t_u.inputs, p_w), t_u, 1, cfg
            )
        else:
            obj = secrecy_rate(pair, ProbabilityDistribution(pair.inputs, cand), None, 1, cfg)
        if best_obj is None or obj.raw_difference > best_obj.raw_difference:
            best_obj = obj
    cr_value = best_obj.rate
    det_value = 0.0 if sym.decision == SYMMETRIZABLE else cr_value
    return CapacityReport(
        best=best_obj,
        decision=sym.decision,
        residual=sym.residual,
        deterministic_capacity_estimate=det_value,
        randomness_assisted_estimate=cr_value,
        sym_report=sym,
        meta={"restarts": len(starts), "backend": kernels.BACKEND},
    )


def _preprocess_search(pair: AVWiretapChannel, p0: np.ndarray, cfg: RunConfig):
    """Joint finite-difference ascent over (p, preprocessing rows).

    The preprocessing maps the input alphabet to itself; the identity map
    is always among the starts, so the search never loses to no
    preprocessing.
    """
    n_a = len(pair.inputs)
    legal = pair.legal_family
    eaves = pair.eaves_family

    def build(t_flat: np.ndarray) -> ClassicalChannel:
        rows = kernels.project_rows(t_flat.reshape(n_a, n_a))
        return ClassicalChannel(pair.inputs, pair.inputs, rows)

    def fun(z: np.ndarray) -> float:
        p_w = _renorm_clip(z[:n_a])
        t_u = build(z[n_a:])
        lf = precompose_family(legal, t_u).stack()
        ef = precompose_family(eaves, t_u).stack()
        val, _ = _min_over_q(p_w, [(1.0, lf)], cfg, 8)
        chi = max(_chi_weights(p_w, ef[t], cfg) for t in range(ef.shape[0]))
        return val - chi

    starts = [np.concatenate([p0, np.eye(n_a).ravel()])]
    rng = np.random.default_rng([cfg.seed, 0x7E57])
    for _ in range(3):
        rows = rng.standard_exponential((n_a, n_a))
        rows /= rows.sum(axis=1, keepdims=True)
        starts.append(np.concatenate([p0, rows.ravel()]))

    best = None
    best_val = -np.inf
    for z0 in starts:
        z = z0.copy()
        val = fun(z)
        step = 0.2
        for _ in range(cfg.rate_iters // 2):
            g = np.zeros_like(z)
            for i in range(len(z)):
                e = np.zeros_like(z)
                e[i] = cfg.fd_step
                g[i] = (fun(z + e) - fun(z - e)) / (2 * cfg.fd_step)
            if float(g @ g) <= 1e-20:
                break
            moved = False
            for _ in range(25):
                cand = z + step * g
                cv = fun(cand)
                if cv > val + 1e-12:
                    z, val = cand, cv
                    step = min(step * 1.5, 8.0)
                    moved = True
                    break
                step *= 0.5
            if not moved:
                break
        if val > best_val:
            best_val = val
            best = z
    if best is None:
        return None
    return _renorm_clip(best[:n_a]), build(best[n_a:])


def maximize_legal_term(pair: AVWiretapChannel, cfg: RunConfig = DEFAULT_CONFIG) -> LegalTerm:
    """max over p of min over q of chi(p; legal mixed by q)."""
    legal_stack = pair.legal_family.stack()
    coarse = cfg.replace(q_grid=max(8, cfg.q_grid // 4))

    def fun(p_w: np.ndarray) -> float:
        val, _ = _min_over_q(p_w, [(1.0, legal_stack)], coarse, 12)
        return val

    starts = _seed_points(pair, cfg, fun)
    best_p, best_val = None, -np.inf
    for x0 in starts:
        x, val = _ascend_simplex(fun, x0, cfg.rate_iters, cfg)
        if val > best_val:
            best_p, best_val = x, val
    p = ProbabilityDistribution(pair.inputs, best_p)
    term = legal_term(p, pair.legal_family, cfg)
    return term


# ---------------------------------------------------------------------------
# key assistance, super-activation, perturbation
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class KeyRateReport:
    value: float
    g: float
    formula_rate: float
    legal_only: float
    decision: str
    warning: str | None
    saturated: bool

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "g": self.g,
            "formula_rate": self.formula_rate,
            "legal_only": self.legal_only,
            "decision": self.decision,
            "warning": self.warning,
            "saturated": self.saturated,
        }


def key_assisted_capacity(
    pair: AVWiretapChannel,
    g: float,
    cfg: RunConfig = DEFAULT_CONFIG,
    base: CapacityReport | None = None,
    ceiling: float | None = None,
) -> KeyRateReport:
    """min(rate + g, legal-only ceiling) for key rate g in bits per letter.

    With a symmetrizable legal family and g > 0 the formula still applies
    (a warning flags the hypothesis); at g = 0 it degenerates to the
    deterministic value zero.  `base` and `ceiling` let a g sweep reuse
    the optimization, which does not depend on g.
    """
    if g < 0:
        raise OutOfRange(f"key rate {g} is negative")
    opt = base if base is not None else optimize_rate(pair, cfg)
    if ceiling is None:
        ceiling = maximize_legal_term(pair, cfg).value
    formula = opt.randomness_assisted_estimate
    warning = None
    if opt.decision == SYMMETRIZABLE:
        if g > 0:
            warning = "legal family is symmetrizable; formula still valid because g > 0"
            value = min(formula + g, ceiling)
        else:
            warning = "legal family is symmetrizable and g = 0; deterministic value is zero"
            value = 0.0
    else:
        if opt.decision != NOT_SYMMETRIZABLE:
            warning = "symmetrizability inconclusive"
        value = min(formula + g, ceiling)
    return KeyRateReport(
        value=value,
        g=g,
        formula_rate=formula,
        legal_only=ceiling,
        decision=opt.decision,
        warning=warning,
        saturated=bool(value >= ceiling),
    )


@dataclass(eq=False)
class SuperactivationReport:
    first: CapacityReport
    second: CapacityReport
    product: CapacityReport
    superactivation: bool
    conditions: dict

    def to_dict(self) -> dict:
        return {
            "first": self.first.to_dict(),
            "second": self.second.to_dict(),
            "product": self.product.to_dict(),
            "superactivation": self.superactivation,
            "conditions": self.conditions,
        }


def _tensor_tau(r1: SymmetrizabilityReport, r2: SymmetrizabilityReport) -> np.ndarray:
    """Product witness tau((t,u)|(a,b)) = tau1(t|a) * tau2(u|b)."""
    t1 = r1.tau.table
    t2 = r2.tau.table
    return np.einsum("at,bu->abtu", t1, t2).reshape(t1.shape[0] * t2.shape[0], -1)


def superactivation_check(
    pair1: AVWiretapChannel, pair2: AVWiretapChannel, cfg: RunConfig = DEFAULT_CONFIG
) -> SuperactivationReport:
    """Evaluate both marginals and their tensor product.

    Super-activation is declared when both single estimates vanish while
    the product family is non-symmetrizable with a positive optimized
    rate.  Two symmetrizable factors can never super-activate: the product
    of their witnesses symmetrizes the product, and that witness is handed
    to the product solver.
    """
    r1 = optimize_rate(pair1, cfg)
    r2 = optimize_rate(pair2, cfg)
    product = tensor_channels(pair1, pair2, cfg)
    extra = None
    both_symmetrizable = r1.decision == SYMMETRIZABLE and r2.decision == SYMMETRIZABLE
    if both_symmetrizable:
        extra = [_tensor_tau(r1.sym_report, r2.sym_report)]
    rp = optimize_rate(product, cfg, extra_tau_starts=extra)

    tol = cfg.positive_rate_tol
    singles_zero = (
        r1.deterministic_capacity_estimate <= tol and r2.deterministic_capacity_estimate <= tol
    )
    product_not_sym = rp.decision == NOT_SYMMETRIZABLE
    product_cr_positive = rp.randomness_assisted_estimate > tol
    flag = singles_zero and product_not_sym and product_cr_positive
    conditions = {
        "single_estimates_zero": singles_zero,
        "first_symmetrizable": r1.decision == SYMMETRIZABLE,
        "second_symmetrizable": r2.decision == SYMMETRIZABLE,
        "product_not_symmetrizable": product_not_sym,
        "product_cr_rate_positive": product_cr_positive,
        "tensor_tau_blocks_product": both_symmetrizable,
    }
    return SuperactivationReport(
        first=r1, second=r2, product=rp, superactivation=flag, conditions=conditions
    )


@dataclass(eq=False)
class PerturbationReport:
    delta: float
    samples: int
    seed: int
    base_f: float
    base_decision: str
    base_rate: float
    base_cr_rate: float
    sample_f: list[float]
    sample_rate: list[float]
    max_distance: float
    found_positive_f_neighbor: bool
    discontinuity_condition_1: bool
    discontinuity_condition_2: bool
    discontinuity_candidate: bool
    stability_observed: bool

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "samples": self.samples,
            "seed": self.seed,
            "base": {
                "f_value": self.base_f,
                "decision": self.base_decision,
                "deterministic_rate": self.base_rate,
                "cr_rate": self.base_cr_rate,
            },
            "sample_f": self.sample_f,
            "sample_rate": self.sample_rate,
            "max_distance": self.max_distance,
            "found_positive_f_neighbor": self.found_positive_f_neighbor,
            "discontinuity_condition_1": self.discontinuity_condition_1,
            "discontinuity_condition_2": self.discontinuity_condition_2,
            "discontinuity_candidate": self.discontinuity_candidate,
            "stability_observed": self.stability_observed,
        }


def _perturb_family(channels, rng: np.random.Generator, delta: float):
    out = []
    max_dist = 0.0
    for ch in channels:
        mats = []
        for a in range(len(ch.inputs)):
            w = rng.uniform(0.0, 0.5 * delta)
            noise = random_density(ch.dim, rng).mat
            mats.append((1.0 - w) * ch.outputs[a] + w * noise)
            dist = w * kernels.trace_norm_herm(ch.outputs[a] - noise)
            max_dist = max(max_dist, float(dist))
        out.append(CQChannel(ch.inputs, np.stack(mats)))
    return tuple(out), max_dist


def perturbation_probe(
    pair: AVWiretapChannel,
    delta: float,
    samples: int,
    seed: int,
    cfg: RunConfig = DEFAULT_CONFIG,
) -> PerturbationReport:
    """Random search of the delta-ball for positive-F neighbors.

    Each output state is mixed with a random state at weight below
    delta/2, which keeps the per-output trace-norm distance below delta.
    Discontinuity needs both a positive randomness-assisted rate at the
    base point (condition 1) and positive-F channels arbitrarily close to
    a zero-F base point (condition 2, sampled here).
    """
    if delta <= 0:
        raise OutOfRange(f"delta {delta} must be positive")
    if samples < 1:
        raise OutOfRange("need at least one sample")
    base = optimize_rate(pair, cfg)
    base_f = base.residual
    sample_f = []
    sample_rate = []
    max_dist = 0.0
    for k in range(samples):
        rng = np.random.default_rng([seed, k])
        legal, d1 = _perturb_family(pair.legal, rng, delta)
        eaves, d2 = _perturb_family(pair.eaves, rng, delta)
        neighbor = AVWiretapChannel(pair.states, legal, eaves, name=f"{pair.name}+perturbed")
        rep = optimize_rate(neighbor, cfg)
        sample_f.append(rep.residual)
        sample_rate.append(rep.deterministic_capacity_estimate)
        max_dist = max(max_dist, d1, d2)
    base_zero_f = base.decision == SYMMETRIZABLE
    found_pos = any(f > cfg.sym_tol * cfg.inconclusive_factor for f in sample_f)
    cond1 = base.randomness_assisted_estimate > cfg.positive_rate_tol
    cond2 = base_zero_f and found_pos
    stability = (not base_zero_f) and all(r > cfg.positive_rate_tol for r in sample_rate)
    return PerturbationReport(
        delta=delta,
        samples=samples,
        seed=seed,
        base_f=base_f,
        base_decision=base.decision,
        base_rate=base.deterministic_capacity_estimate,
        base_cr_rate=base.randomness_assisted_estimate,
        sample_f=sample_f,
        sample_rate=sample_rate,
        max_distance=max_dist,
        found_positive_f_neighbor=found_pos,
        discontinuity_condition_1=cond1,
        discontinuity_condition_2=cond2,
        discontinuity_candidate=cond1 and cond2,
        stability_observed=stability,
    )
