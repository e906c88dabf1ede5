"""Command line front end.

Every command reads channel fixtures from JSON, runs one analysis, and
writes a machine-readable report (pretty JSON with sorted keys, or CSV
with a header row).  All stochastic work is seeded, so a repeated
invocation with the same flags produces byte-identical output.

Exit codes: 0 success, 2 validation or hypothesis failure, 3 budget
exceeded, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .capacity import (
    key_assisted_capacity,
    optimize_rate,
    perturbation_probe,
    rate_trend,
    superactivation_check,
)
from .channels import ProbabilityDistribution, load_channel
from .codesim import (
    build_code,
    covering_experiment,
    error_trend,
    verify_typicality,
    worst_case,
)
from .config import DEFAULT_CONFIG, RunConfig, threads_from_env
from .errors import BudgetError, OutOfRange, ParseError, ToolkitError
from .quantum import (
    DensityMatrix,
    fannes_audenaert_bound,
    gentle_operator_check,
    random_density,
    trace_norm_distance,
    von_neumann_entropy,
)
from .symmetrize import grid_oracle, solve_symmetrizability

OK = 0
VALIDATION = 2
BUDGET = 3
USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(USAGE, f"{self.format_usage()}{self.prog}: error: {message}\n")


def _config(args) -> RunConfig:
    seed = getattr(args, "seed", None)
    return DEFAULT_CONFIG.replace(
        seed=0 if seed is None else int(seed), threads=threads_from_env(1)
    )


def _emit(args, text: str) -> None:
    out = getattr(args, "out", None)
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _csv_text(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_csv_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def _csv_cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _load(path, cfg: RunConfig):
    try:
        return load_channel(path, cfg)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc


def _floats(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip() != ""]
    except ValueError as exc:
        raise ParseError(f"bad numeric list {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError as exc:
        raise ParseError(f"bad integer list {text!r}") from exc


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_analyze(args) -> int:
    cfg = _config(args)
    pair = _load(args.channel, cfg)
    report = optimize_rate(pair, cfg, optimize_preprocess=args.preprocess)
    payload = {
        "channel": pair.name,
        "f_value": report.residual,
        "symmetrizability": report.sym_report.to_dict(),
        "capacity": report.to_dict(),
        "config": cfg.to_dict(),
        "seed": cfg.seed,
    }
    _emit(args, _json_text(payload))
    return OK


def cmd_f_functional(args) -> int:
    cfg = _config(args)
    pair = _load(args.channel, cfg)
    report = solve_symmetrizability(pair.legal_family, cfg)
    payload = {
        "channel": pair.name,
        "f_value": report.residual,
        "report": report.to_dict(),
        "config": cfg.to_dict(),
        "seed": cfg.seed,
    }
    if args.grid:
        payload["grid_value"] = grid_oracle(pair.legal_family, args.grid, cfg)
    _emit(args, _json_text(payload))
    return OK


def cmd_rate(args) -> int:
    cfg = _config(args)
    pair = _load(args.channel, cfg)
    report = optimize_rate(pair, cfg)
    rows = rate_trend(pair, report.best.p, report.best.preprocess, args.n, cfg)
    table = [(obj.n, obj.legal_term, obj.eaves_term, obj.rate) for obj in rows]
    _emit(args, _csv_text(("n", "legal_term", "eaves_term", "rate_per_letter"), table))
    return OK


def cmd_key_rate(args) -> int:
    cfg = _config(args)
    pair = _load(args.channel, cfg)
    report = key_assisted_capacity(pair, args.g, cfg)
    payload = {
        "channel": pair.name,
        "key_rate": report.to_dict(),
        "config": cfg.to_dict(),
        "seed": cfg.seed,
    }
    _emit(args, _json_text(payload))
    return OK


def cmd_superactivation(args) -> int:
    cfg = _config(args)
    first = _load(args.first, cfg)
    second = _load(args.second, cfg)
    report = superactivation_check(first, second, cfg)
    payload = {
        "first": first.name,
        "second": second.name,
        "report": report.to_dict(),
        "config": cfg.to_dict(),
        "seed": cfg.seed,
    }
    _emit(args, _json_text(payload))
    return OK


def cmd_perturb(args) -> int:
    cfg = _config(args)
    pair = _load(args.channel, cfg)
    report = perturbation_probe(pair, args.delta, args.samples, args.seed, cfg)
    payload = {
        "channel": pair.name,
        "probe": report.to_dict(),
        "config": cfg.to_dict(),
        "seed": cfg.seed,
    }
    _emit(args, _json_text(payload))
    return OK


def _reference(pair, text: str) -> ProbabilityDistribution:
    if text == "uniform":
        return ProbabilityDistribution.uniform(pair.states)
    if text.startswith("point:"):
        label = text.split(":", 1)[1]
        if label not in pair.states:
            raise ParseError(f"unknown state {label!r}; have {pair.states}")
        return ProbabilityDistribution.point_mass(pair.states, label)
    raise ParseError(f"bad decoder reference {text!r}; use uniform or point:<state>")


def cmd_simulate(args) -> int:
    cfg = _config(args)
    pair = _load(args.channel, cfg)
    reference = _reference(pair, args.decoder_ref)
    if args.trend:
        reports = error_trend(
            pair,
            list(range(1, args.n + 1)),
            args.messages,
            args.depth,
            args.seed,
            cfg,
            reference=reference,
        )
        table = [(r.n, r.worst_case_error, r.worst_case_leakage) for r in reports]
        _emit(args, _csv_text(("n", "worst_error", "worst_leakage"), table))
        return OK
    code = build_code(
        pair, args.n, args.messages, args.depth, args.seed, reference=reference, cfg=cfg
    )
    report = worst_case(code, pair, cfg, seed=args.seed)
    table = [("|".join(pat), err, leak) for pat, err, leak in report.rows]
    _emit(args, _csv_text(("pattern", "error", "leakage"), table))
    return OK


def cmd_lemma_typicality(args) -> int:
    cfg = _config(args)
    spectrum = _floats(args.spectrum)
    if not spectrum or abs(sum(spectrum) - 1.0) > 1e-9 or min(spectrum) < 0:
        raise ParseError(f"spectrum {args.spectrum!r} is not a probability vector")
    rho = DensityMatrix(np.diag(np.array(spectrum, dtype=np.complex128)))
    rows = verify_typicality(rho, _ints(args.n_list), args.alpha, cfg)
    payload = {
        "alpha": args.alpha,
        "spectrum": spectrum,
        "rows": [r.to_dict() for r in rows],
        "config": cfg.to_dict(),
        "seed": cfg.seed,
    }
    _emit(args, _json_text(payload))
    return OK


def cmd_lemma_covering(args) -> int:
    cfg = _config(args)
    e = args.excite
    if not 0.0 < e < 1.0:
        raise OutOfRange(f"excite weight {e} outside (0, 1)")
    states = [
        DensityMatrix(np.diag([1.0 - e, e]).astype(np.complex128)),
        DensityMatrix(np.diag([e, 1.0 - e]).astype(np.complex128)),
    ]
    subs = [np.diag([1.0, 0.0]).astype(np.complex128), np.diag([0.0, 1.0]).astype(np.complex128)]
    p = ProbabilityDistribution.uniform(("m0", "m1"))
    report = covering_experiment(
        states,
        p,
        np.eye(2, dtype=np.complex128),
        subs,
        _ints(args.l_list),
        args.trials,
        args.seed,
        cfg,
    )
    payload = {
        "experiment": report.to_dict(),
        "config": cfg.to_dict(),
        "seed": args.seed,
    }
    _emit(args, _json_text(payload))
    return OK


def cmd_lemma_fannes(args) -> int:
    cfg = _config(args)
    tested = skipped = violations = 0
    min_gap = math.inf
    for k in range(args.trials):
        rng = np.random.default_rng([args.seed, k])
        rho = random_density(args.dim, rng)
        sigma = random_density(args.dim, rng)
        mu = 0.5 * trace_norm_distance(rho, sigma)
        if mu >= 1.0 / math.e:
            skipped += 1
            continue
        bound = fannes_audenaert_bound(mu, args.dim)
        gap = bound - abs(von_neumann_entropy(rho, cfg) - von_neumann_entropy(sigma, cfg))
        tested += 1
        min_gap = min(min_gap, gap)
        if gap < -1e-8:
            violations += 1
    payload = {
        "lemma": "fannes",
        "dim": args.dim,
        "trials": args.trials,
        "tested": tested,
        "skipped": skipped,
        "violations": violations,
        "min_gap": None if math.isinf(min_gap) else min_gap,
        "config": cfg.to_dict(),
        "seed": args.seed,
    }
    _emit(args, _json_text(payload))
    return OK


def cmd_lemma_gentle(args) -> int:
    cfg = _config(args)
    violations = 0
    max_ratio = 0.0
    for k in range(args.trials):
        rng = np.random.default_rng([args.seed, k])
        rho = random_density(args.dim, rng)
        g = rng.standard_normal((args.dim, args.dim)) + 1j * rng.standard_normal(
            (args.dim, args.dim)
        )
        vecs = np.linalg.qr(g)[0]
        eff = (vecs * rng.uniform(0.0, 1.0, args.dim)) @ vecs.conj().T
        lhs, rhs = gentle_operator_check(rho, eff, cfg)
        if lhs > rhs + 1e-8:
            violations += 1
        if rhs > 0:
            max_ratio = max(max_ratio, lhs / rhs)
    payload = {
        "lemma": "gentle",
        "dim": args.dim,
        "trials": args.trials,
        "violations": violations,
        "max_ratio": max_ratio,
        "config": cfg.to_dict(),
        "seed": args.seed,
    }
    _emit(args, _json_text(payload))
    return OK


# ---------------------------------------------------------------------------
# parser assembly
# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="avqw", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed_required=False):
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument(
            "--seed",
            type=int,
            required=seed_required,
            default=None if seed_required else 0,
            help="seed for every random draw in the command",
        )

    p = sub.add_parser("analyze", help="symmetrizability plus rate optimization")
    p.add_argument("channel")
    p.add_argument("--preprocess", action="store_true", help="also search preprocessing maps")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("f-functional", help="symmetrizability residual")
    p.add_argument("channel")
    p.add_argument("--grid", type=int, default=0, help="also run the grid oracle at this resolution")
    common(p)
    p.set_defaults(func=cmd_f_functional)

    p = sub.add_parser("rate", help="per-letter trend table up to block length n")
    p.add_argument("channel")
    p.add_argument("--n", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("key-rate", help="key-assisted capacity at key rate g")
    p.add_argument("channel")
    p.add_argument("--g", type=float, required=True)
    common(p)
    p.set_defaults(func=cmd_key_rate)

    p = sub.add_parser("superactivation", help="marginals versus the product channel")
    p.add_argument("first")
    p.add_argument("second")
    common(p)
    p.set_defaults(func=cmd_superactivation)

    p = sub.add_parser("perturb", help="random probe of the delta ball")
    p.add_argument("channel")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--samples", type=int, default=8)
    common(p, seed_required=True)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("simulate", help="random wiretap code versus every pattern")
    p.add_argument("channel")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--messages", type=int, required=True)
    p.add_argument("--depth", type=int, default=1)
    p.add_argument("--decoder-ref", default="uniform", help="uniform or point:<state>")
    p.add_argument("--trend", action="store_true", help="one code per n = 1..N, summary rows")
    common(p, seed_required=True)
    p.set_defaults(func=cmd_simulate)

    lemma = sub.add_parser("lemma", help="empirical lemma verifiers")
    lsub = lemma.add_subparsers(dest="lemma_command", required=True)

    p = lsub.add_parser("typicality", help="typical subspace statistics, exact")
    p.add_argument("--spectrum", default="0.75,0.25")
    p.add_argument("--alpha", type=float, default=0.4)
    p.add_argument("--n-list", default="4,8,12")
    common(p)
    p.set_defaults(func=cmd_lemma_typicality)

    p = lsub.add_parser("covering", help="operator covering bound, Monte Carlo")
    p.add_argument("--excite", type=float, default=0.6)
    p.add_argument("--l-list", default="4,8,16,32")
    p.add_argument("--trials", type=int, default=200)
    common(p, seed_required=True)
    p.set_defaults(func=cmd_lemma_covering)

    p = lsub.add_parser("fannes", help="entropy continuity sweep")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--dim", type=int, default=4)
    common(p, seed_required=True)
    p.set_defaults(func=cmd_lemma_fannes)

    p = lsub.add_parser("gentle", help="gentle measurement sweep")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--dim", type=int, default=4)
    common(p, seed_required=True)
    p.set_defaults(func=cmd_lemma_gentle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BudgetError as exc:
        sys.stderr.write(f"budget exceeded: {exc}\n")
        return BUDGET
    except ToolkitError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return VALIDATION
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return VALIDATION


if __name__ == "__main__":
    sys.exit(main())
