"""Small random wiretap codes and empirical lemma verification.

Codes are built the way the random-coding argument builds them: codeword
letters drawn i.i.d. from an input distribution truncated to its typical
set, a stochastic encoder uniform over each message's row, and a
square-root (pretty good) measurement decoder assembled against a fixed
reference mixture of the legal family.  Error and leakage criteria are
then evaluated exactly by enumerating every adversary state pattern.

The lemma verifiers (typicality, covering) work at desk scale: spectra
and type classes are enumerated exactly, Monte Carlo only enters where
the statement itself is probabilistic.
"""

from __future__ import annotations

import itertools
import math
import time
from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import kernels
from .channels import (
    AVWiretapChannel,
    ChannelFamily,
    CQChannel,
    ProbabilityDistribution,
    mix_states,
    n_fold_output,
)
from .config import DEFAULT_CONFIG, RunConfig
from .errors import (
    DimensionCap,
    EmptyTypicalSet,
    EnumerationTooLarge,
    HypothesisViolated,
    LengthMismatch,
    NonConvergence,
    NotSymmetrizable,
    OutOfRange,
)
from .quantum import (
    DensityMatrix,
    PovmElement,
    batch_von_neumann,
    von_neumann_entropy,
)
from .symmetrize import SYMMETRIZABLE, solve_symmetrizability

_MAX_PROPOSALS = 500_000


# ---------------------------------------------------------------------------
# typical-word sampling
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class TypicalSampler:
    """Draws i.i.d. words from p^n conditioned on letter-frequency typicality.

    A word x^n is kept when every letter count satisfies
    |N(a)/n - p(a)| <= delta/|A| (inclusive).  Rejection counts are kept so
    the empirical acceptance probability can be reported.
    """

    p: ProbabilityDistribution
    n: int
    delta: float
    proposed: int = 0
    accepted: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise OutOfRange(f"block length {self.n} below 1")
        if self.delta < 0:
            raise OutOfRange(f"delta {self.delta} is negative")
        self._slack = self.delta / len(self.p.support)
        lo, hi = [], []
        for w in self.p.weights:
            lo.append(max(0, math.ceil(self.n * (w - self._slack) - 1e-9)))
            hi.append(min(self.n, math.floor(self.n * (w + self._slack) + 1e-9)))
        if any(a > b for a, b in zip(lo, hi)) or sum(lo) > self.n or sum(hi) < self.n:
            raise EmptyTypicalSet(
                f"no length-{self.n} word meets the typicality window delta={self.delta}"
            )

    def is_typical(self, word) -> bool:
        counts = Counter(word)
        for label, w in zip(self.p.support, self.p.weights):
            if abs(counts.get(label, 0) / self.n - w) > self._slack + 1e-12:
                return False
        return len(counts.keys() - set(self.p.support)) == 0

    def draw(self, rng: np.random.Generator) -> tuple[str, ...]:
        labels = list(self.p.support)
        for _ in range(_MAX_PROPOSALS):
            self.proposed += 1
            idx = rng.choice(len(labels), size=self.n, p=self.p.weights)
            word = tuple(labels[i] for i in idx)
            if self.is_typical(word):
                self.accepted += 1
                return word
        raise NonConvergence(
            f"no typical word accepted after {_MAX_PROPOSALS} proposals"
        )

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposed if self.proposed else float("nan")


def truncated_type_distribution(
    p: ProbabilityDistribution, n: int, delta: float
) -> TypicalSampler:
    """Sampler for p^n restricted to the delta-typical words."""
    return TypicalSampler(p, n, delta)


def sample_codebook(sampler: TypicalSampler, j_count: int, depth: int, seed) -> tuple:
    """J x L codebook of typical words from one seed-derived stream."""
    if j_count < 1 or depth < 1:
        raise OutOfRange("need at least one message and one codeword per message")
    rng = np.random.default_rng(seed)
    return tuple(
        tuple(sampler.draw(rng) for _ in range(depth)) for _ in range(j_count)
    )


# ---------------------------------------------------------------------------
# codes and decoding
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class WiretapCode:
    n: int
    j_count: int
    depth: int
    codebook: tuple  # j_count rows of depth words
    decoder: list | None = None  # PovmElements on the n-fold legal space

    def __post_init__(self):
        if len(self.codebook) != self.j_count:
            raise LengthMismatch(f"{len(self.codebook)} rows for {self.j_count} messages")
        for row in self.codebook:
            if len(row) != self.depth:
                raise LengthMismatch(f"row of {len(row)} words, depth {self.depth}")
            for word in row:
                if len(word) != self.n:
                    raise LengthMismatch(f"word length {len(word)}, block {self.n}")


def _word_output(channel: CQChannel, word, cfg: RunConfig) -> np.ndarray:
    dim = channel.dim ** len(word)
    if dim > cfg.max_dim:
        raise DimensionCap(f"n-fold dimension {dim} exceeds the cap {cfg.max_dim}")
    out = channel.output(word[0])
    for a in word[1:]:
        out = np.kron(out, channel.output(a))
    return out


def _message_states_ref(code: WiretapCode, channel: CQChannel, cfg: RunConfig) -> np.ndarray:
    sigmas = []
    for row in code.codebook:
        s = sum(_word_output(channel, word, cfg) for word in row)
        sigmas.append(s / code.depth)
    return np.stack(sigmas)


def _message_states_pattern(
    code: WiretapCode, family: ChannelFamily, pattern, cfg: RunConfig
) -> np.ndarray:
    sigmas = []
    for row in code.codebook:
        s = sum(n_fold_output(family, pattern, word, cfg).mat for word in row)
        sigmas.append(s / code.depth)
    return np.stack(sigmas)


def pgm_decoder(
    codebook: tuple,
    family: ChannelFamily,
    reference: ProbabilityDistribution,
    cfg: RunConfig = DEFAULT_CONFIG,
) -> list:
    """Square-root measurement against the reference mixture of the family.

    D_j = S^{-1/2} sigma_j S^{-1/2} on the support of S = sum_j sigma_j;
    the identity mass left on the null space of S is split uniformly
    across messages, which restores completeness exactly.
    """
    j_count = len(codebook)
    depth = len(codebook[0])
    n = len(codebook[0][0])
    code = WiretapCode(n, j_count, depth, codebook)
    ref = mix_states(family, reference)
    sigmas = _message_states_ref(code, ref, cfg)
    s_total = sigmas.sum(axis=0)
    eigs, vecs = np.linalg.eigh(s_total)
    support = eigs > cfg.pgm_support_cutoff
    inv_sqrt = np.zeros_like(eigs)
    inv_sqrt[support] = 1.0 / np.sqrt(eigs[support])
    root = (vecs * inv_sqrt) @ vecs.conj().T
    dim = s_total.shape[0]
    elements = [root @ sig @ root for sig in sigmas]
    residual = np.eye(dim, dtype=np.complex128) - sum(elements)
    residual = 0.5 * (residual + residual.conj().T)
    out = []
    for el in elements:
        m = el + residual / j_count
        m = np.ascontiguousarray(0.5 * (m + m.conj().T))
        m.setflags(write=False)
        out.append(PovmElement(m))
    return out


def error_probability(
    code: WiretapCode, family: ChannelFamily, pattern, cfg: RunConfig = DEFAULT_CONFIG
) -> float:
    """Average decoding error 1 - (1/J) sum_j tr(sigma_j(t^n) D_j)."""
    if code.decoder is None:
        raise OutOfRange("code carries no decoder")
    pattern = tuple(pattern)
    if len(pattern) != code.n:
        raise LengthMismatch(f"pattern length {len(pattern)}, block {code.n}")
    sigmas = _message_states_pattern(code, family, pattern, cfg)
    hit = 0.0
    for j, d in enumerate(code.decoder):
        hit += float(np.trace(sigmas[j] @ d.mat).real)
    return float(min(max(1.0 - hit / code.j_count, 0.0), 1.0))


def _ensemble_chi(states: np.ndarray, cfg: RunConfig) -> float:
    j_count = states.shape[0]
    weights = np.full(j_count, 1.0 / j_count)
    avg = np.einsum("j,jrs->rs", weights, states)
    ents = batch_von_neumann(np.concatenate([avg[None, :, :], states]), cfg)
    value = float(ents[0] - weights @ ents[1:])
    return min(max(value, 0.0), math.log2(j_count) if j_count > 1 else 0.0)


@dataclass(eq=False)
class SimReport:
    n: int
    j_count: int
    depth: int
    worst_case_error: float
    worst_case_leakage: float
    rows: list  # (pattern, error, leakage) per enumerated t^n
    seed: object
    elapsed: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "messages": self.j_count,
            "depth": self.depth,
            "worst_case_error": self.worst_case_error,
            "worst_case_leakage": self.worst_case_leakage,
            "rows": [
                {"pattern": list(pat), "error": err, "leakage": leak}
                for pat, err, leak in self.rows
            ],
            "seed": self.seed,
            "elapsed": self.elapsed,
        }


def worst_case(
    code: WiretapCode,
    pair: AVWiretapChannel,
    cfg: RunConfig = DEFAULT_CONFIG,
    seed=None,
) -> SimReport:
    """Exhaustive error and leakage maxima over all state patterns."""
    n_pat = len(pair.states) ** code.n
    if n_pat > cfg.max_patterns:
        raise EnumerationTooLarge(
            f"{n_pat} state patterns exceed the budget {cfg.max_patterns}"
        )
    start = time.perf_counter()
    rows = []
    worst_err = 0.0
    worst_leak = 0.0
    for pattern in itertools.product(pair.states, repeat=code.n):
        err = error_probability(code, pair.legal_family, pattern, cfg)
        z_states = _message_states_pattern(code, pair.eaves_family, pattern, cfg)
        leak = _ensemble_chi(z_states, cfg)
        rows.append((pattern, err, leak))
        worst_err = max(worst_err, err)
        worst_leak = max(worst_leak, leak)
    return SimReport(
        n=code.n,
        j_count=code.j_count,
        depth=code.depth,
        worst_case_error=worst_err,
        worst_case_leakage=worst_leak,
        rows=rows,
        seed=seed,
        elapsed=time.perf_counter() - start,
    )


def build_code(
    pair: AVWiretapChannel,
    n: int,
    j_count: int,
    depth: int,
    seed,
    reference: ProbabilityDistribution | None = None,
    delta: float | None = None,
    cfg: RunConfig = DEFAULT_CONFIG,
) -> WiretapCode:
    """Random code over the uniform (or given) typical sampler plus decoder."""
    p = ProbabilityDistribution.uniform(pair.inputs)
    if delta is None:
        delta = float(2 * len(pair.inputs))  # every word typical
    sampler = truncated_type_distribution(p, n, delta)
    codebook = sample_codebook(sampler, j_count, depth, seed)
    if reference is None:
        reference = ProbabilityDistribution.uniform(pair.states)
    decoder = pgm_decoder(codebook, pair.legal_family, reference, cfg)
    return WiretapCode(n, j_count, depth, codebook, decoder)


@dataclass(eq=False)
class DichotomyReport:
    n: int
    j_count: int
    trials: int
    seed: int
    min_worst_error: float
    per_trial: list
    residual: float
    decision: str

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "messages": self.j_count,
            "trials": self.trials,
            "seed": self.seed,
            "min_worst_error": self.min_worst_error,
            "per_trial": self.per_trial,
            "residual": self.residual,
            "decision": self.decision,
        }


def dichotomy_witness(
    pair: AVWiretapChannel,
    n: int,
    j_count: int = 2,
    trials: int = 100,
    seed: int = 0,
    cfg: RunConfig = DEFAULT_CONFIG,
    check_hypothesis: bool = True,
) -> DichotomyReport:
    """Empirical error floor for symmetrizable legal families.

    Over `trials` random codes the minimum of the worst-pattern error is
    reported; for a symmetrizable legal family it stays bounded away from
    zero no matter the code.  The floor is recorded, not asserted as a
    theoretical constant.
    """
    residual = float("nan")
    decision = "unchecked"
    if check_hypothesis:
        rep = solve_symmetrizability(pair.legal_family, cfg)
        residual = rep.residual
        decision = rep.decision
        if rep.decision != SYMMETRIZABLE:
            raise NotSymmetrizable(
                f"legal family residual {rep.residual:.3e}; witness needs a symmetrizable family"
            )
    per_trial = []
    for k in range(trials):
        code = build_code(pair, n, j_count, 1, [seed, k], cfg=cfg)
        report = worst_case(code, pair, cfg, seed=[seed, k])
        per_trial.append(report.worst_case_error)
    return DichotomyReport(
        n=n,
        j_count=j_count,
        trials=trials,
        seed=seed,
        min_worst_error=float(min(per_trial)),
        per_trial=per_trial,
        residual=residual,
        decision=decision,
    )


def error_trend(
    pair: AVWiretapChannel,
    n_list,
    j_count: int,
    depth: int,
    seed: int,
    cfg: RunConfig = DEFAULT_CONFIG,
    reference: ProbabilityDistribution | None = None,
) -> list[SimReport]:
    """One fresh random code per block length; rows for the trend table."""
    out = []
    for i, n in enumerate(n_list):
        code = build_code(pair, n, j_count, depth, [seed, i], reference=reference, cfg=cfg)
        out.append(worst_case(code, pair, cfg, seed=[seed, i]))
    return out


def concatenate_codes(prefix: WiretapCode, payload: WiretapCode) -> WiretapCode:
    """Two-part code: words concatenate, messages and rows tensorize."""
    codebook = tuple(
        tuple(w1 + w2 for w1 in row1 for w2 in row2)
        for row1 in prefix.codebook
        for row2 in payload.codebook
    )
    decoder = None
    if prefix.decoder is not None and payload.decoder is not None:
        decoder = []
        for d1 in prefix.decoder:
            for d2 in payload.decoder:
                m = np.ascontiguousarray(np.kron(d1.mat, d2.mat))
                m.setflags(write=False)
                decoder.append(PovmElement(m))
    return WiretapCode(
        prefix.n + payload.n,
        prefix.j_count * payload.j_count,
        prefix.depth * payload.depth,
        codebook,
        decoder,
    )


# ---------------------------------------------------------------------------
# typical subspace
# ---------------------------------------------------------------------------


def _spectral_groups(rho: DensityMatrix, cfg: RunConfig):
    """Distinct nonzero eigenvalues with multiplicities and eigenvectors.

    Grouping equal eigenvalues makes the frequency labels basis-stable:
    a degenerate block counts as one label, so the maximally mixed state
    has a single label and every word is typical at any alpha >= 0.
    """
    eigs, vecs = np.linalg.eigh(rho.mat)
    order = np.argsort(-eigs, kind="stable")
    eigs = eigs[order]
    vecs = vecs[:, order]
    groups = []  # (value, member eigvec indices)
    for i, lam in enumerate(eigs):
        if lam <= 1e-12:
            continue
        if groups and abs(groups[-1][0] - lam) <= cfg.eig_group_tol:
            groups[-1][1].append(i)
        else:
            groups.append((float(lam), [i]))
    return groups, vecs


def typical_projector(
    rho: DensityMatrix, n: int, alpha: float, cfg: RunConfig = DEFAULT_CONFIG
) -> PovmElement:
    """Projector onto eigen-words with alpha-typical label frequencies.

    Labels are the distinct nonzero eigenvalues of rho; a word over the
    support eigenvectors is typical when every label's frequency is
    within alpha/(label count) of its spectral mass.
    """
    if n < 1:
        raise OutOfRange(f"block length {n} below 1")
    if alpha < 0:
        raise OutOfRange(f"alpha {alpha} is negative")
    d = rho.dim
    if d**n > cfg.max_dim:
        raise DimensionCap(f"n-fold dimension {d ** n} exceeds the cap {cfg.max_dim}")
    groups, vecs = _spectral_groups(rho, cfg)
    n_g = len(groups)
    label_of = {}
    masses = np.zeros(n_g)
    for g, (lam, members) in enumerate(groups):
        masses[g] = lam * len(members)
        for i in members:
            label_of[i] = g
    slack = alpha / n_g if n_g else 0.0
    support = sorted(label_of.keys())
    columns = []
    for word in itertools.product(support, repeat=n):
        counts = np.zeros(n_g)
        for i in word:
            counts[label_of[i]] += 1
        if np.all(np.abs(counts / n - masses) <= slack + 1e-12):
            col = vecs[:, word[0]]
            for i in word[1:]:
                col = np.kron(col, vecs[:, i])
            columns.append(col)
    dim = d**n
    if not columns:
        proj = np.zeros((dim, dim), dtype=np.complex128)
    else:
        q = np.stack(columns, axis=1)
        proj = q @ q.conj().T
    proj = np.ascontiguousarray(0.5 * (proj + proj.conj().T))
    proj.setflags(write=False)
    return PovmElement(proj)


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@dataclass(eq=False)
class TypicalityRow:
    n: int
    mass: float
    projector_trace: int
    type_class_count: int
    min_eig: float
    max_eig: float
    entropy: float
    delta_n: float
    beta_n: float
    dim_upper: float
    dim_lower: float
    eig_upper: float
    eig_lower: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mass": self.mass,
            "projector_trace": self.projector_trace,
            "type_class_count": self.type_class_count,
            "min_eig": self.min_eig,
            "max_eig": self.max_eig,
            "entropy": self.entropy,
            "delta_n": self.delta_n,
            "beta_n": self.beta_n if math.isfinite(self.beta_n) else None,
            "dim_upper": self.dim_upper,
            "dim_lower": self.dim_lower,
            "eig_upper": self.eig_upper,
            "eig_lower": self.eig_lower,
        }


def verify_typicality(
    rho: DensityMatrix, n_list, alpha: float, cfg: RunConfig = DEFAULT_CONFIG
) -> list[TypicalityRow]:
    """Exact typical-subspace statistics via type-class enumeration.

    Works in the spectral domain, so block lengths well past the matrix
    cap are exact: masses are multinomial sums, the projector trace is an
    integer count, and the extreme nonzero eigenvalues of the projected
    power are products over the label counts.  Asserts the dimension
    sandwich with the empirically measured delta_n and that the mass is
    non-decreasing along n_list.
    """
    groups, _ = _spectral_groups(rho, cfg)
    n_g = len(groups)
    if n_g == 0:
        raise OutOfRange("state has no spectrum above the floor")
    lams = np.array([g[0] for g in groups])
    mults = np.array([len(g[1]) for g in groups])
    masses = lams * mults
    slack = alpha / n_g
    entropy = von_neumann_entropy(rho, cfg)
    rows = []
    for n in n_list:
        if n < 1:
            raise OutOfRange(f"block length {n} below 1")
        mass = 0.0
        count = 0
        classes = 0
        min_eig, max_eig = np.inf, 0.0
        delta_n = 0.0
        for c in _compositions(n, n_g):
            freq = np.array(c) / n
            if not np.all(np.abs(freq - masses) <= slack + 1e-12):
                continue
            classes += 1
            multinom = math.factorial(n)
            for k in c:
                multinom //= math.factorial(k)
            words = multinom * int(np.prod(mults ** np.array(c), dtype=object))
            count += words
            mass += float(multinom * np.prod((mults * lams) ** np.array(c)))
            eig = float(np.prod(lams ** np.array(c)))
            min_eig = min(min_eig, eig)
            max_eig = max(max_eig, eig)
            s_c = -float(freq @ np.log2(lams))
            delta_n = max(delta_n, abs(s_c - entropy))
        if classes == 0:
            raise EmptyTypicalSet(f"no typical type class at n={n}, alpha={alpha}")
        mass = min(mass, 1.0)
        beta_n = -math.log2(1.0 - mass) / n if mass < 1.0 else math.inf
        row = TypicalityRow(
            n=n,
            mass=mass,
            projector_trace=count,
            type_class_count=classes,
            min_eig=min_eig,
            max_eig=max_eig,
            entropy=entropy,
            delta_n=delta_n,
            beta_n=beta_n,
            dim_upper=2.0 ** (n * (entropy + delta_n)),
            dim_lower=mass * 2.0 ** (n * (entropy - delta_n)),
            eig_upper=2.0 ** (-n * (entropy - delta_n)),
            eig_lower=2.0 ** (-n * (entropy + delta_n)),
        )
        if count > row.dim_upper * (1 + 1e-9) or count < row.dim_lower * (1 - 1e-9):
            raise HypothesisViolated(
                f"dimension sandwich failed at n={n}: count {count} vs "
                f"[{row.dim_lower:.6g}, {row.dim_upper:.6g}]"
            )
        if min_eig > row.eig_upper * (1 + 1e-9) or max_eig < row.eig_lower * (1 - 1e-9):
            raise HypothesisViolated(f"eigenvalue sandwich failed at n={n}")
        rows.append(row)
    for prev, cur in zip(rows, rows[1:]):
        if cur.mass < prev.mass - 1e-12:
            raise HypothesisViolated(
                f"typical mass decreased from n={prev.n} ({prev.mass:.6f}) "
                f"to n={cur.n} ({cur.mass:.6f})"
            )
    return rows


# ---------------------------------------------------------------------------
# covering experiment
# ---------------------------------------------------------------------------


def _check_projector(mat: np.ndarray, name: str) -> None:
    if np.max(np.abs(mat - mat.conj().T)) > 1e-8:
        raise HypothesisViolated(f"{name} is not Hermitian")
    if np.max(np.abs(mat @ mat - mat)) > 1e-8:
        raise HypothesisViolated(f"{name} is not idempotent")


@dataclass(eq=False)
class CoveringRow:
    ensemble_size: int  # L
    threshold: float
    bound: float
    failure_rate: float
    mean_deviation: float
    max_deviation: float
    informative: bool

    def to_dict(self) -> dict:
        return {
            "L": self.ensemble_size,
            "threshold": self.threshold,
            "bound": self.bound,
            "failure_rate": self.failure_rate,
            "mean_deviation": self.mean_deviation,
            "max_deviation": self.max_deviation,
            "informative": self.informative,
        }


@dataclass(eq=False)
class CoveringReport:
    epsilon: float
    big_dim: float  # D = tr(Pi)
    inverse_peak: float  # d with Pi_m rho_m Pi_m <= Pi_m / d
    threshold: float
    trials: int
    seed: int
    rows: list

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "D": self.big_dim,
            "d": self.inverse_peak,
            "threshold": self.threshold,
            "trials": self.trials,
            "seed": self.seed,
            "rows": [r.to_dict() for r in self.rows],
        }


def covering_experiment(
    states,
    p: ProbabilityDistribution,
    projector: np.ndarray,
    sub_projectors,
    l_list,
    trials: int,
    seed: int,
    cfg: RunConfig = DEFAULT_CONFIG,
) -> CoveringReport:
    """Monte Carlo check of the operator covering bound.

    The hypothesis constants are measured from the supplied operators:
    epsilon from the worst projected mass, D = tr(projector), d from the
    largest eigenvalue of the compressed states.  For each L the failure
    frequency of the trace-norm deviation test is compared with
    2 D exp(-eps^3 L d / (2 ln2 D)); whenever that bound is below one the
    empirical frequency must not exceed it, otherwise the row is flagged
    uninformative and nothing is asserted.
    """
    mats = [np.asarray(s.mat if isinstance(s, DensityMatrix) else s) for s in states]
    subs = [np.asarray(m.mat if isinstance(m, PovmElement) else m) for m in sub_projectors]
    if len(mats) != len(p.support) or len(subs) != len(p.support):
        raise LengthMismatch(
            f"{len(mats)} states, {len(subs)} sub-projectors, {len(p.support)} labels"
        )
    projector = np.asarray(projector.mat if isinstance(projector, PovmElement) else projector)
    _check_projector(projector, "total projector")
    for i, sub in enumerate(subs):
        _check_projector(sub, f"sub-projector {p.support[i]}")

    eps = 0.0
    peak = 0.0
    compressed = []
    for rho, sub in zip(mats, subs):
        m_total = float(np.trace(projector @ rho).real)
        m_sub = float(np.trace(sub @ rho).real)
        eps = max(eps, 1.0 - min(m_total, m_sub))
        comp = projector @ sub @ rho @ sub @ projector
        comp = 0.5 * (comp + comp.conj().T)
        compressed.append(comp)
        peak = max(peak, float(np.linalg.eigvalsh(sub @ rho @ sub).max()))
    eps = min(max(eps, 0.0), 1.0)
    if peak <= 0.0:
        raise HypothesisViolated("constant d undefined: every compressed state vanishes")
    d_const = 1.0 / peak
    big_d = float(np.trace(projector).real)
    if big_d <= 0.0:
        raise HypothesisViolated("constant D vanished: total projector has zero trace")

    threshold = 42.0 * eps**0.125  # full-mass hypothesis set
    omega = np.einsum("m,mrs->rs", p.weights, np.stack(compressed))
    rows = []
    for li, ell in enumerate(l_list):
        if ell < 1:
            raise OutOfRange(f"ensemble size {ell} below 1")
        bound = 2.0 * big_d * math.exp(-(eps**3) * ell * d_const / (2.0 * math.log(2.0) * big_d))
        failures = 0
        devs = []
        for trial in range(trials):
            rng = np.random.default_rng([seed, li, trial])
            picks = rng.choice(len(mats), size=ell, p=p.weights)
            avg = np.zeros_like(omega)
            for m in picks:
                avg = avg + compressed[m]
            avg = avg / ell
            dev = float(kernels.trace_norm_herm(avg - omega))
            devs.append(dev)
            if dev > threshold:
                failures += 1
        rate = failures / trials
        informative = bound < 1.0
        if informative and rate > bound:
            raise HypothesisViolated(
                f"failure rate {rate:.4f} exceeds the bound {bound:.4f} at L={ell}"
            )
        rows.append(
            CoveringRow(
                ensemble_size=int(ell),
                threshold=threshold,
                bound=bound,
                failure_rate=rate,
                mean_deviation=float(np.mean(devs)),
                max_deviation=float(np.max(devs)),
                informative=informative,
            )
        )
    return CoveringReport(
        epsilon=eps,
        big_dim=big_d,
        inverse_peak=d_const,
        threshold=threshold,
        trials=trials,
        seed=seed,
        rows=rows,
    )
