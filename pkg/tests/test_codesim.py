"""Sampling, PGM decoding, worst-case sweeps, typical subspaces, covering."""
import math

import numpy as np
import pytest

from avqw.channels import ChannelFamily, CQChannel, ProbabilityDistribution
from avqw.codesim import (
    build_code,
    concatenate_codes,
    covering_experiment,
    dichotomy_witness,
    error_probability,
    error_trend,
    pgm_decoder,
    sample_codebook,
    truncated_type_distribution,
    typical_projector,
    verify_typicality,
    WiretapCode,
    worst_case,
)
from avqw.config import DEFAULT_CONFIG
from avqw.errors import (
    DimensionCap,
    EmptyTypicalSet,
    EnumerationTooLarge,
    HypothesisViolated,
    LengthMismatch,
    NotSymmetrizable,
)
from avqw.fixtures import build
from avqw.quantum import (
    PovmElement,
    basis_projector,
    maximally_mixed,
    pure_state,
    validate_density,
)


def binary_p(w):
    return ProbabilityDistribution(("0", "1"), np.array([w, 1 - w]))


class TestTypicalSampler:
    def test_point_mass_always_constant(self):
        samp = truncated_type_distribution(
            ProbabilityDistribution.point_mass(("0", "1"), "1"), 5, 0.1
        )
        rng = np.random.default_rng(0)
        for _ in range(5):
            assert samp.draw(rng) == ("1",) * 5
        assert samp.acceptance_rate == pytest.approx(1.0)

    def test_acceptance_matches_binomial(self):
        """Typical window {5,6,7} zeros at n = 8, p = 0.75."""
        samp = truncated_type_distribution(binary_p(0.75), 8, 0.25)
        rng = np.random.default_rng(3)
        draws = [samp.draw(rng) for _ in range(2000)]
        for w in draws[:50]:
            assert samp.is_typical(w)
        exact = sum(
            math.comb(8, k) * 0.75**k * 0.25 ** (8 - k) for k in (5, 6, 7)
        )
        # 3 sigma of the acceptance frequency over ~2500 proposals
        assert samp.acceptance_rate == pytest.approx(exact, abs=0.03)

    def test_empty_window_raises(self):
        with pytest.raises(EmptyTypicalSet):
            truncated_type_distribution(binary_p(0.9), 3, 0.05)

    def test_draw_reproducible(self):
        samp1 = truncated_type_distribution(binary_p(0.6), 6, 0.3)
        samp2 = truncated_type_distribution(binary_p(0.6), 6, 0.3)
        a = [samp1.draw(np.random.default_rng([9, k])) for k in range(10)]
        b = [samp2.draw(np.random.default_rng([9, k])) for k in range(10)]
        assert a == b

    def test_wide_window_accepts_everything(self):
        samp = truncated_type_distribution(binary_p(0.5), 4, 4.0)
        rng = np.random.default_rng(1)
        for _ in range(50):
            samp.draw(rng)
        assert samp.acceptance_rate == pytest.approx(1.0)


def test_sample_codebook_shape_and_typicality():
    samp = truncated_type_distribution(binary_p(0.75), 8, 0.25)
    book = sample_codebook(samp, j_count=3, depth=2, seed=17)
    assert len(book) == 3
    for row in book:
        assert len(row) == 2
        for word in row:
            assert len(word) == 8
            assert samp.is_typical(word)


class TestPgmDecoder:
    def test_orthogonal_signals_decode_perfectly(self):
        pair = build("noiseless_vs_constant")
        fam = pair.legal_family
        codebook = ((("0",),), (("1",),))
        decoder = pgm_decoder(codebook, fam, ProbabilityDistribution.uniform(fam.states))
        code = WiretapCode(1, 2, 1, codebook, decoder)
        assert error_probability(code, fam, ("t0",)) == pytest.approx(0.0, abs=1e-10)

    def test_completeness(self):
        pair = build("degraded_eaves")
        fam = pair.legal_family
        codebook = ((("0", "1"),), (("1", "0"),), (("0", "0"),))
        decoder = pgm_decoder(codebook, fam, ProbabilityDistribution.uniform(fam.states))
        total = sum(d.mat for d in decoder)
        assert np.abs(total - np.eye(4)).max() < 1e-8

    def test_single_message_gets_identity(self):
        fam = build("noiseless_vs_constant").legal_family
        decoder = pgm_decoder(((("0",),),), fam, ProbabilityDistribution.uniform(fam.states))
        assert np.abs(decoder[0].mat - np.eye(2)).max() < 1e-10

    def test_two_codeword_qubit_near_optimal(self):
        """Square-root measurement against a swept binary projective oracle."""
        w0 = basis_projector(2, 0).mat
        w1 = pure_state(np.array([1.0, 1.0]) / np.sqrt(2)).mat
        fam = ChannelFamily(
            ("t0",), (CQChannel(("0", "1"), np.stack([w0, w1])),)
        )
        codebook = ((("0",),), (("1",),))
        decoder = pgm_decoder(codebook, fam, ProbabilityDistribution.uniform(fam.states))
        code = WiretapCode(1, 2, 1, codebook, decoder)
        got = error_probability(code, fam, ("t0",))
        best = 1.0
        for theta in np.linspace(0, np.pi, 721):
            for phi in (0.0, np.pi / 2, np.pi, 3 * np.pi / 2):
                v = np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])
                proj = np.outer(v, v.conj())
                err = 0.5 * (1 - np.trace(proj @ w0).real) + 0.5 * np.trace(proj @ w1).real
                best = min(best, err)
        assert got == pytest.approx(best, abs=5e-2)
        # Helstrom value for this pair
        assert best == pytest.approx(0.5 * (1 - np.sqrt(2) / 2), abs=1e-4)


class TestErrorProbability:
    def test_identity_split_decoder(self):
        fam = build("noiseless_vs_constant").legal_family
        for j in (2, 4):
            decoder = [PovmElement(np.eye(2) / j) for _ in range(j)]
            codebook = tuple((("0",),) for _ in range(j))
            code = WiretapCode(1, j, 1, codebook, decoder)
            assert error_probability(code, fam, ("t0",)) == pytest.approx(1 - 1 / j)

    def test_worst_case_on_xor_is_half(self):
        """Symmetrizable family: every codebook decodes at chance level."""
        pair = build("xor_symmetrizable")
        code = build_code(pair, n=2, j_count=2, depth=1, seed=4)
        rep = worst_case(code, pair)
        assert rep.worst_case_error == pytest.approx(0.5, abs=1e-9)
        assert rep.worst_case_leakage == pytest.approx(0.0, abs=1e-9)
        assert len(rep.rows) == 4

    def test_leakage_bounded_by_log_messages(self):
        pair = build("degraded_eaves")
        code = build_code(pair, n=2, j_count=4, depth=1, seed=8)
        rep = worst_case(code, pair)
        assert 0.0 <= rep.worst_case_leakage <= 2.0 + 1e-9

    def test_pattern_enumeration_cap(self):
        pair = build("xor_symmetrizable")
        code = build_code(pair, n=2, j_count=2, depth=1, seed=4)
        cfg = DEFAULT_CONFIG.replace(max_patterns=3)
        with pytest.raises(EnumerationTooLarge):
            worst_case(code, pair, cfg)


class TestTrendAndDichotomy:
    def test_noiseless_error_vanishes_at_n2(self):
        pair = build("noiseless_vs_constant")
        reps = error_trend(pair, (1, 2), j_count=2, depth=1, seed=7)
        errs = [r.worst_case_error for r in reps]
        assert errs[1] <= errs[0] + 1e-12
        assert errs[1] <= 1e-6
        assert all(r.worst_case_leakage <= 1e-8 for r in reps)

    def test_dichotomy_witness_floor(self):
        rep = dichotomy_witness(build("xor_symmetrizable"), n=2, j_count=2, trials=20, seed=11)
        assert rep.min_worst_error >= 0.25
        assert rep.decision == "symmetrizable"
        assert len(rep.per_trial) == 20

    def test_dichotomy_requires_symmetrizable(self):
        with pytest.raises(NotSymmetrizable):
            dichotomy_witness(build("noiseless_vs_constant"), n=1, trials=2, seed=0)

    def test_dichotomy_hypothesis_override(self):
        rep = dichotomy_witness(
            build("noiseless_vs_constant"), n=1, trials=2, seed=0, check_hypothesis=False
        )
        assert rep.decision == "unchecked"


def test_concatenate_codes():
    pair = build("noiseless_vs_constant")
    a = build_code(pair, n=1, j_count=2, depth=1, seed=2)
    b = build_code(pair, n=2, j_count=2, depth=1, seed=3)
    cat = concatenate_codes(a, b)
    assert cat.n == 3
    assert cat.j_count == 4
    assert len(cat.codebook) == 4
    assert all(len(word) == 3 for row in cat.codebook for word in row)
    total = sum(d.mat for d in cat.decoder)
    assert np.abs(total - np.eye(8)).max() < 1e-8


class TestTypicalProjector:
    def test_maximally_mixed_keeps_everything(self):
        proj = typical_projector(maximally_mixed(3), n=3, alpha=0.0)
        assert np.abs(proj.mat - np.eye(27)).max() < 1e-12

    def test_pure_state_rank_one(self):
        proj = typical_projector(basis_projector(2, 0), n=4, alpha=0.5)
        assert np.trace(proj.mat).real == pytest.approx(1.0, abs=1e-12)

    def test_binomial_trace(self):
        rho = validate_density(np.diag([0.75, 0.25]))
        proj = typical_projector(rho, n=8, alpha=0.4)
        assert np.trace(proj.mat).real == pytest.approx(92.0, abs=1e-9)

    def test_projector_property(self):
        rho = validate_density(np.diag([0.6, 0.4]))
        proj = typical_projector(rho, n=5, alpha=0.3)
        assert np.abs(proj.mat @ proj.mat - proj.mat).max() < 1e-10
        assert np.abs(proj.mat - proj.mat.conj().T).max() < 1e-12

    def test_dimension_cap(self):
        with pytest.raises(DimensionCap):
            typical_projector(maximally_mixed(2), n=3, alpha=0.1, cfg=DEFAULT_CONFIG.replace(max_dim=4))


class TestVerifyTypicality:
    def test_binomial_oracle(self):
        """Counts and masses recomputed from scratch for diag(0.75, 0.25)."""
        rho = validate_density(np.diag([0.75, 0.25]))
        rows = verify_typicality(rho, (4, 8, 12), alpha=0.4)
        windows = {4: (3, 3), 8: (5, 7), 12: (7, 11)}
        for row in rows:
            lo, hi = windows[row.n]
            count = sum(math.comb(row.n, k) for k in range(lo, hi + 1))
            mass = sum(
                math.comb(row.n, k) * 0.75**k * 0.25 ** (row.n - k)
                for k in range(lo, hi + 1)
            )
            assert row.projector_trace == count
            assert row.mass == pytest.approx(mass, abs=1e-12)
            assert row.type_class_count == hi - lo + 1
        masses = [row.mass for row in rows]
        assert masses == sorted(masses)
        assert masses[-1] >= 0.9

    def test_pure_state_mass_one(self):
        rows = verify_typicality(basis_projector(2, 0), (2, 4), alpha=0.2)
        for row in rows:
            assert row.mass == pytest.approx(1.0, abs=1e-12)
            assert row.projector_trace == 1

    def test_eigenvalue_sandwich_reported(self):
        rho = validate_density(np.diag([0.75, 0.25]))
        row = verify_typicality(rho, (8,), alpha=0.4)[0]
        assert row.eig_lower <= row.min_eig <= row.max_eig <= row.eig_upper
        assert row.dim_lower <= row.projector_trace <= row.dim_upper


class TestCovering:
    @staticmethod
    def qubit_ensemble(e):
        states = [
            validate_density(np.diag([1 - e, e])),
            validate_density(np.diag([e, 1 - e])),
        ]
        subs = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
        return states, binary_p(0.5), np.eye(2), subs

    def test_measured_constants(self):
        states, p, proj, subs = self.qubit_ensemble(0.6)
        rep = covering_experiment(states, p, proj, subs, (8,), trials=20, seed=3)
        assert rep.epsilon == pytest.approx(0.6, abs=1e-12)
        assert rep.big_dim == pytest.approx(2.0, abs=1e-12)
        assert rep.inverse_peak == pytest.approx(2.5, abs=1e-12)
        assert rep.threshold == pytest.approx(42 * 0.6**0.125, abs=1e-9)

    def test_bound_respected_when_informative(self):
        states, p, proj, subs = self.qubit_ensemble(0.6)
        rep = covering_experiment(states, p, proj, subs, (8, 32), trials=50, seed=3)
        for row in rep.rows:
            want = 2 * 2.0 * np.exp(-(0.6**3) * row.ensemble_size * 2.5 / (2 * np.log(2) * 2.0))
            assert row.bound == pytest.approx(want, rel=1e-9)
            assert row.informative == (row.bound < 1.0)
            if row.informative:
                assert row.failure_rate <= row.bound + 1e-12

    def test_uninformative_rows_are_flagged_not_asserted(self):
        states, p, proj, subs = self.qubit_ensemble(0.6)
        rep = covering_experiment(states, p, proj, subs, (2,), trials=10, seed=3)
        assert not rep.rows[0].informative
        assert rep.rows[0].bound >= 1.0

    def test_rejects_non_projector(self):
        states, p, _, subs = self.qubit_ensemble(0.6)
        with pytest.raises(HypothesisViolated):
            covering_experiment(states, p, 0.5 * np.eye(2), subs, (8,), trials=5, seed=0)

    def test_length_mismatch(self):
        states, p, proj, subs = self.qubit_ensemble(0.6)
        with pytest.raises(LengthMismatch):
            covering_experiment(states[:1], p, proj, subs, (8,), trials=5, seed=0)

    def test_deterministic_under_seed(self):
        states, p, proj, subs = self.qubit_ensemble(0.55)
        a = covering_experiment(states, p, proj, subs, (16,), trials=30, seed=12)
        b = covering_experiment(states, p, proj, subs, (16,), trials=30, seed=12)
        assert a.rows[0].failure_rate == b.rows[0].failure_rate
        assert a.rows[0].mean_deviation == b.rows[0].mean_deviation
