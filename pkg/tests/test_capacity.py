"""Rate terms, the optimizer, key assistance, super-activation, perturbation."""
import numpy as np
import pytest

from avqw.capacity import (
    NOT_SYMMETRIZABLE,
    SYMMETRIZABLE,
    conditional_entropy,
    eaves_term,
    holevo_chi,
    key_assisted_capacity,
    legal_term,
    maximize_legal_term,
    optimize_rate,
    perturbation_probe,
    rate_trend,
    secrecy_rate,
    superactivation_check,
)
from avqw.channels import (
    ChannelFamily,
    ClassicalChannel,
    CQChannel,
    ProbabilityDistribution,
    tensor_channels,
)
from avqw.config import DEFAULT_CONFIG
from avqw.errors import EnumerationTooLarge, OutOfRange
from avqw.fixtures import build
from avqw.quantum import (
    basis_projector,
    maximally_mixed,
    pure_state,
    von_neumann_entropy,
)

UNIFORM2 = ProbabilityDistribution.uniform(("0", "1"))


@pytest.fixture(scope="module")
def reports():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = optimize_rate(build(name))
        return cache[name]

    return get


class TestHolevo:
    def test_orthogonal_pure_uniform(self):
        ch = CQChannel(
            ("0", "1"), np.stack([basis_projector(2, 0).mat, basis_projector(2, 1).mat])
        )
        assert holevo_chi(UNIFORM2, ch) == pytest.approx(1.0, abs=1e-12)

    def test_constant_channel(self):
        ch = CQChannel(("0", "1"), np.stack([maximally_mixed(2).mat] * 2))
        assert holevo_chi(UNIFORM2, ch) == pytest.approx(0.0, abs=1e-12)

    def test_nonorthogonal_pair(self):
        plus = pure_state(np.array([1.0, 1.0]) / np.sqrt(2))
        ch = CQChannel(("0", "1"), np.stack([basis_projector(2, 0).mat, plus.mat]))
        assert holevo_chi(UNIFORM2, ch) == pytest.approx(0.600876, abs=1e-6)

    def test_skewed_prior(self):
        ch = CQChannel(
            ("0", "1"), np.stack([basis_projector(2, 0).mat, basis_projector(2, 1).mat])
        )
        p = ProbabilityDistribution(("0", "1"), np.array([0.25, 0.75]))
        want = -(0.25 * np.log2(0.25) + 0.75 * np.log2(0.75))
        assert holevo_chi(p, ch) == pytest.approx(want, abs=1e-12)

    def test_clamped_to_log_dim(self):
        rng = np.random.default_rng(43)
        for _ in range(20):
            d = int(rng.integers(2, 4))
            n_a = int(rng.integers(2, 4))
            from avqw.quantum import random_density

            ch = CQChannel(
                tuple(str(a) for a in range(n_a)),
                np.stack([random_density(d, rng).mat for _ in range(n_a)]),
            )
            p = ProbabilityDistribution(
                ch.inputs, rng.dirichlet(np.ones(n_a))
            )
            v = holevo_chi(p, ch)
            assert -1e-12 <= v <= np.log2(d) + 1e-10

    def test_chi_decomposition(self):
        """chi = S(output of the average) - average conditional entropy."""
        plus = pure_state(np.array([1.0, 1.0]) / np.sqrt(2))
        ch = CQChannel(("0", "1"), np.stack([basis_projector(2, 0).mat, plus.mat]))
        from avqw.channels import apply
        avg = apply(ch, UNIFORM2)
        want = von_neumann_entropy(avg) - conditional_entropy(ch, UNIFORM2)
        assert holevo_chi(UNIFORM2, ch) == pytest.approx(want, abs=1e-12)


class TestRateTerms:
    def test_legal_term_single_member(self):
        fam = build("noiseless_vs_constant").legal_family
        lt = legal_term(UNIFORM2, fam)
        assert lt.value == pytest.approx(1.0, abs=1e-9)
        assert lt.q.weights.shape == (1,)

    def test_legal_term_identical_members_no_minimization_loss(self):
        ch = CQChannel(
            ("0", "1"), np.stack([basis_projector(2, 0).mat, basis_projector(2, 1).mat])
        )
        fam = ChannelFamily(("t0", "t1"), (ch, ch))
        lt = legal_term(UNIFORM2, fam)
        assert lt.value == pytest.approx(1.0, abs=1e-9)

    def test_legal_term_matches_fine_grid(self):
        """Adversarial q minimization against a brute force sweep."""
        fam = build("xor_symmetrizable").legal_family
        lt = legal_term(UNIFORM2, fam)
        best = np.inf
        from avqw.channels import mix_states

        for k in range(2001):
            w = k / 2000
            q = ProbabilityDistribution(fam.states, np.array([w, 1 - w]))
            best = min(best, holevo_chi(UNIFORM2, mix_states(fam, q)))
        assert lt.value == pytest.approx(best, abs=1e-4)

    def test_eaves_term_constant_family_is_zero(self):
        fam = build("noiseless_vs_constant").eaves_family
        et = eaves_term(UNIFORM2, fam, n=2)
        assert et.value == pytest.approx(0.0, abs=1e-12)

    def test_eaves_term_additive_over_slots(self):
        """n = 2 worst pattern value equals the explicit two-letter evaluation."""
        fam = build("degraded_eaves").eaves_family
        et1 = eaves_term(UNIFORM2, fam, n=1)
        et2 = eaves_term(UNIFORM2, fam, n=2)
        assert et2.value == pytest.approx(2 * et1.value, abs=1e-9)
        assert et2.per_letter[-1] == pytest.approx(et1.value, abs=1e-9)
        # independent route: kron the two slots into one channel and take chi
        st = fam.stack()
        t_best = fam.states.index(et1.pattern[0])
        two_inputs = tuple(f"{a}{b}" for a in "01" for b in "01")
        outs = np.stack(
            [
                np.kron(st[t_best, a], st[t_best, b])
                for a in range(2)
                for b in range(2)
            ]
        )
        joint = CQChannel(two_inputs, outs)
        p2 = ProbabilityDistribution(
            two_inputs, np.kron(UNIFORM2.weights, UNIFORM2.weights)
        )
        assert et2.value == pytest.approx(holevo_chi(p2, joint), abs=1e-9)

    def test_eaves_per_letter_constant(self):
        fam = build("degraded_eaves").eaves_family
        vals = [eaves_term(UNIFORM2, fam, n=k).per_letter[-1] for k in (1, 2, 3)]
        assert max(vals) - min(vals) < 1e-9

    def test_eaves_worst_pattern_over_two_members(self):
        """The max really scans patterns: the leaky member wins every slot."""
        leaky = CQChannel(
            ("0", "1"), np.stack([basis_projector(2, 0).mat, basis_projector(2, 1).mat])
        )
        dull = CQChannel(("0", "1"), np.stack([maximally_mixed(2).mat] * 2))
        fam = ChannelFamily(("t0", "t1"), (leaky, dull))
        et = eaves_term(UNIFORM2, fam, n=2)
        assert et.pattern == ("t0", "t0")
        assert et.value == pytest.approx(2.0, abs=1e-9)
        assert et.per_letter[-1] == pytest.approx(1.0, abs=1e-9)

    def test_eaves_enumeration_cap(self):
        fam = build("xor_symmetrizable").eaves_family
        cfg = DEFAULT_CONFIG.replace(max_patterns=3)
        with pytest.raises(EnumerationTooLarge):
            eaves_term(UNIFORM2, fam, n=2, cfg=cfg)


class TestSecrecyRate:
    def test_noiseless_unit_rate(self):
        obj = secrecy_rate(build("noiseless_vs_constant"), UNIFORM2)
        assert obj.rate == pytest.approx(1.0, abs=1e-9)
        assert obj.legal_term == pytest.approx(1.0, abs=1e-9)
        assert obj.eaves_term == pytest.approx(0.0, abs=1e-12)

    def test_legal_equals_eaves_zero(self):
        obj = secrecy_rate(build("legal_equals_eaves"), UNIFORM2)
        assert obj.rate == pytest.approx(0.0, abs=1e-9)
        assert obj.raw_difference <= 1e-9

    def test_degraded_gap(self):
        obj = secrecy_rate(build("degraded_eaves"), UNIFORM2)
        pair = build("degraded_eaves")
        want = legal_term(UNIFORM2, pair.legal_family).value - eaves_term(
            UNIFORM2, pair.eaves_family, n=1
        ).value
        assert obj.rate == pytest.approx(want, abs=1e-9)

    def test_hat_identity_preprocessing_changes_nothing(self):
        pair = build("noiseless_vs_constant")
        ident = ClassicalChannel.identity(pair.inputs)
        obj = secrecy_rate(pair, UNIFORM2, t_u=ident, n=2)
        assert obj.rate == pytest.approx(1.0, abs=1e-9)
        assert obj.n == 2

    def test_rate_trend_constant_for_noiseless(self):
        pair = build("noiseless_vs_constant")
        ident = ClassicalChannel.identity(pair.inputs)
        objs = rate_trend(pair, UNIFORM2, ident, n_max=3)
        assert len(objs) == 3
        for obj in objs:
            assert obj.rate == pytest.approx(1.0, abs=1e-9)


class TestOptimizeRate:
    def test_noiseless(self, reports):
        rep = reports("noiseless_vs_constant")
        assert rep.decision == NOT_SYMMETRIZABLE
        assert rep.deterministic_capacity_estimate == pytest.approx(1.0, abs=1e-4)
        assert rep.randomness_assisted_estimate == pytest.approx(1.0, abs=1e-4)

    def test_legal_equals_eaves(self, reports):
        rep = reports("legal_equals_eaves")
        assert rep.randomness_assisted_estimate == pytest.approx(0.0, abs=1e-6)

    def test_xor_dichotomy_zeroing(self, reports):
        rep = reports("xor_symmetrizable")
        assert rep.decision == SYMMETRIZABLE
        assert rep.deterministic_capacity_estimate == 0.0
        assert rep.randomness_assisted_estimate == pytest.approx(0.0, abs=1e-6)

    def test_degraded(self, reports):
        rep = reports("degraded_eaves")
        want = 0.8112781244591328  # legal 1 minus binary eaves entropy gap at p*
        assert rep.randomness_assisted_estimate == pytest.approx(want, abs=1e-4)

    def test_shift_keeps_cr_rate(self, reports):
        rep = reports("shift_symmetrizable")
        assert rep.decision == SYMMETRIZABLE
        assert rep.deterministic_capacity_estimate == 0.0
        assert rep.randomness_assisted_estimate == pytest.approx(0.5, abs=1e-4)

    def test_grid_sweep_agrees(self, reports):
        """Optimizer never loses to a 500 point sweep over input priors."""
        for name in ("noiseless_vs_constant", "degraded_eaves"):
            pair = build(name)
            rep = reports(name)
            best = 0.0
            for k in range(501):
                w = k / 500
                p = ProbabilityDistribution(pair.inputs, np.array([w, 1 - w]))
                best = max(best, secrecy_rate(pair, p).rate)
            assert rep.randomness_assisted_estimate >= best - 1e-3

    def test_report_meta(self, reports):
        meta = reports("noiseless_vs_constant").meta
        assert meta["restarts"] >= 1
        assert meta["backend"] in ("numba", "numpy")


class TestKeyAssisted:
    def test_degraded_small_key(self, reports):
        rep = key_assisted_capacity(build("degraded_eaves"), 0.1, base=reports("degraded_eaves"))
        assert rep.value == pytest.approx(0.9112781244591328, abs=1e-4)
        assert not rep.saturated

    def test_zero_key_matches_unassisted(self, reports):
        base = reports("degraded_eaves")
        rep = key_assisted_capacity(build("degraded_eaves"), 0.0, base=base)
        assert rep.value == pytest.approx(base.randomness_assisted_estimate, abs=1e-12)

    def test_saturation_exact(self, reports):
        base = reports("degraded_eaves")
        rep = key_assisted_capacity(build("degraded_eaves"), 5.0, base=base)
        assert rep.saturated
        assert rep.value == rep.legal_only

    def test_monotone_in_g(self, reports):
        pair = build("degraded_eaves")
        base = reports("degraded_eaves")
        ceiling = maximize_legal_term(pair).value
        vals = [
            key_assisted_capacity(pair, g, base=base, ceiling=ceiling).value
            for g in (0.0, 0.05, 0.3, 1.0, 3.0)
        ]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))

    def test_symmetrizable_with_positive_key_warns(self, reports):
        rep = key_assisted_capacity(build("xor_symmetrizable"), 0.3, base=reports("xor_symmetrizable"))
        assert rep.warning is not None
        assert rep.decision == SYMMETRIZABLE

    def test_symmetrizable_without_key_is_zero(self, reports):
        rep = key_assisted_capacity(build("xor_symmetrizable"), 0.0, base=reports("xor_symmetrizable"))
        assert rep.value == 0.0
        assert rep.warning is not None

    def test_negative_key_rejected(self):
        with pytest.raises(OutOfRange):
            key_assisted_capacity(build("xor_symmetrizable"), -0.1)


class TestSuperactivation:
    def test_positive_pair(self):
        """Symmetrizable-but-useful times useless-but-stable activates."""
        rep = superactivation_check(build("shift_symmetrizable"), build("legal_equals_eaves"))
        assert rep.superactivation
        assert rep.conditions["single_estimates_zero"]
        assert rep.conditions["first_symmetrizable"]
        assert not rep.conditions["second_symmetrizable"]
        assert rep.conditions["product_not_symmetrizable"]
        assert rep.conditions["product_cr_rate_positive"]
        assert rep.product.randomness_assisted_estimate == pytest.approx(0.5, abs=1e-3)

    def test_two_symmetrizable_factors_stay_dead(self):
        """The tensor-tau construction kills the product of two symmetrizable pairs."""
        rep = superactivation_check(build("xor_symmetrizable"), build("shift_symmetrizable"))
        assert not rep.superactivation
        assert rep.conditions["tensor_tau_blocks_product"]
        assert rep.product.residual == pytest.approx(0.0, abs=1e-9)


class TestPerturbation:
    def test_stable_fixture(self):
        rep = perturbation_probe(build("noiseless_vs_constant"), 0.05, samples=4, seed=5)
        assert rep.stability_observed
        assert not rep.discontinuity_candidate
        assert rep.base_f > 1.9
        assert all(f > 1.5 for f in rep.sample_f)

    def test_shift_is_a_discontinuity_candidate(self):
        rep = perturbation_probe(build("shift_symmetrizable"), 0.05, samples=4, seed=5)
        assert rep.discontinuity_candidate
        assert rep.base_cr_rate == pytest.approx(0.5, abs=1e-3)
        assert rep.base_f <= 1e-7
        assert all(f > 1e-7 for f in rep.sample_f)
        assert rep.max_distance <= 0.05 + 1e-12

    def test_xor_not_a_candidate(self):
        """Zero cr rate means nothing is lost at the boundary."""
        rep = perturbation_probe(build("xor_symmetrizable"), 0.05, samples=2, seed=5)
        assert not rep.discontinuity_candidate
        assert rep.discontinuity_condition_2

    def test_argument_validation(self):
        pair = build("xor_symmetrizable")
        with pytest.raises(OutOfRange):
            perturbation_probe(pair, -0.1, samples=2, seed=0)
        with pytest.raises(OutOfRange):
            perturbation_probe(pair, 0.05, samples=0, seed=0)


def test_product_channel_rate_at_least_best_factor():
    """Feeding the best factor input through the product cannot lose rate."""
    a = build("noiseless_vs_constant")
    prod = tensor_channels(a, a)
    rep_a = optimize_rate(a)
    rep_prod = optimize_rate(prod)
    assert (
        rep_prod.randomness_assisted_estimate
        >= rep_a.randomness_assisted_estimate - 1e-3
    )
