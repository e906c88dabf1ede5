"""Channel containers, block outputs, preprocessing, JSON round trips."""
import json

import numpy as np
import pytest

from avqw.channels import (
    AVWiretapChannel,
    ChannelFamily,
    ClassicalChannel,
    CQChannel,
    ProbabilityDistribution,
    apply,
    hat_precompose,
    load_channel,
    load_classical,
    mix_states,
    n_fold_output,
    pair_label,
    precompose,
    precompose_family,
    save_channel,
    save_classical,
    tensor_channels,
)
from avqw.config import DEFAULT_CONFIG
from avqw.errors import (
    AlphabetMismatch,
    BadBlockLength,
    DimensionCap,
    LengthMismatch,
    OutOfRange,
    ParseError,
    TraceNotOne,
    ValidationError,
)
from avqw.fixtures import build
from avqw.quantum import basis_projector, maximally_mixed, random_density


def _proj(d, k):
    return basis_projector(d, k).mat


def qubit_channel(m0, m1):
    return CQChannel(("0", "1"), np.stack([m0, m1]))


class TestProbabilityDistribution:
    def test_uniform_and_point(self):
        u = ProbabilityDistribution.uniform(("a", "b", "c"))
        assert np.allclose(u.weights, 1 / 3)
        pm = ProbabilityDistribution.point_mass(("a", "b", "c"), "b")
        assert pm.weights.tolist() == [0.0, 1.0, 0.0]

    def test_rejects_negative(self):
        with pytest.raises(OutOfRange):
            ProbabilityDistribution(("a", "b"), np.array([1.2, -0.2]))

    def test_rejects_bad_sum(self):
        with pytest.raises((TraceNotOne, ValidationError)):
            ProbabilityDistribution(("a", "b"), np.array([0.6, 0.6]))

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            ProbabilityDistribution(("a", "b"), np.array([1.0]))


class TestCQChannel:
    def test_validated_catches_bad_state(self):
        bad = np.diag([0.7, 0.7])
        with pytest.raises(TraceNotOne) as exc:
            CQChannel.validated(("0", "1"), [_proj(2, 0), bad])
        assert "1" in str(exc.value)

    def test_output_lookup(self):
        ch = qubit_channel(_proj(2, 0), _proj(2, 1))
        assert np.array_equal(ch.output("1"), _proj(2, 1))
        assert ch.dim == 2

    def test_shape_mismatch(self):
        with pytest.raises(LengthMismatch):
            CQChannel(("0", "1"), np.stack([_proj(2, 0)]))

    def test_outputs_read_only(self):
        ch = qubit_channel(_proj(2, 0), _proj(2, 1))
        with pytest.raises(ValueError):
            ch.outputs[0, 0, 0] = 9.0


class TestFamilyAndPair:
    def test_family_alphabet_check(self):
        a = qubit_channel(_proj(2, 0), _proj(2, 1))
        b = CQChannel(("x", "y"), np.stack([_proj(2, 0), _proj(2, 1)]))
        with pytest.raises(AlphabetMismatch):
            ChannelFamily(("t0", "t1"), (a, b))

    def test_family_dim_check(self):
        a = qubit_channel(_proj(2, 0), _proj(2, 1))
        b = CQChannel(("0", "1"), np.stack([_proj(3, 0), _proj(3, 1)]))
        with pytest.raises(ValidationError):
            ChannelFamily(("t0", "t1"), (a, b))

    def test_stack_shape(self):
        fam = build("xor_symmetrizable").legal_family
        st = fam.stack()
        assert st.shape == (fam.size, len(fam.inputs), fam.dim, fam.dim)

    def test_pair_alphabet_check(self):
        legal = (qubit_channel(_proj(2, 0), _proj(2, 1)),)
        eaves = (CQChannel(("x", "y"), np.stack([_proj(2, 0), _proj(2, 1)])),)
        with pytest.raises(AlphabetMismatch):
            AVWiretapChannel(("t0",), legal, eaves)


def test_classical_channel_validation():
    ident = ClassicalChannel.identity(("0", "1"))
    assert np.array_equal(ident.matrix, np.eye(2))
    with pytest.raises(ValidationError):
        ClassicalChannel(("0", "1"), ("0", "1"), np.array([[0.9, 0.3], [0.0, 1.0]]))
    with pytest.raises(OutOfRange):
        ClassicalChannel(("0", "1"), ("0", "1"), np.array([[1.1, -0.1], [0.0, 1.0]]))


def test_apply_and_mix():
    pair = build("noiseless_vs_constant")
    fam = pair.legal_family
    p = ProbabilityDistribution(("0", "1"), np.array([0.25, 0.75]))
    rho = apply(fam.channels[0], p)
    assert np.allclose(rho.mat, np.diag([0.25, 0.75]))
    mixed = mix_states(fam, ProbabilityDistribution.uniform(fam.states))
    # one state in the family, so mixing returns that channel
    assert np.allclose(mixed.outputs, fam.channels[0].outputs)


def test_mix_states_two_members():
    pair = build("xor_symmetrizable")
    fam = pair.legal_family
    q = ProbabilityDistribution(fam.states, np.array([0.25, 0.75]))
    mixed = mix_states(fam, q)
    want = 0.25 * fam.channels[0].outputs + 0.75 * fam.channels[1].outputs
    assert np.allclose(mixed.outputs, want)


class TestBlockOutputs:
    def test_kron_order(self):
        fam = build("xor_symmetrizable").legal_family
        rho = n_fold_output(fam, ("t0", "t1"), ("0", "1"))
        first = fam.channel("t0").output("0")
        second = fam.channel("t1").output("1")
        assert np.allclose(rho.mat, np.kron(first, second))

    def test_length_mismatch(self):
        fam = build("xor_symmetrizable").legal_family
        with pytest.raises(LengthMismatch):
            n_fold_output(fam, ("t0",), ("0", "1"))

    def test_dimension_cap(self):
        fam = build("xor_symmetrizable").legal_family
        cfg = DEFAULT_CONFIG.replace(max_dim=4)
        with pytest.raises(DimensionCap):
            n_fold_output(fam, ("t0",) * 3, ("0",) * 3, cfg)


class TestTensorChannels:
    def test_labels_and_outputs(self):
        a = build("noiseless_vs_constant")
        b = build("xor_symmetrizable")
        prod = tensor_channels(a, b)
        assert prod.states == tuple(
            pair_label(s, t) for s in a.states for t in b.states
        )
        assert prod.inputs == tuple(
            pair_label(x, y) for x in a.inputs for y in b.inputs
        )
        out = prod.legal_family.channel(pair_label("t0", "t0")).output(pair_label("0", "1"))
        want = np.kron(
            a.legal_family.channel("t0").output("0"),
            b.legal_family.channel("t0").output("1"),
        )
        assert np.allclose(out, want)

    def test_dim_cap(self):
        a = build("shift_symmetrizable")
        cfg = DEFAULT_CONFIG.replace(dim_cap=8)
        with pytest.raises(DimensionCap):
            tensor_channels(a, a, cfg)


class TestPreprocessing:
    def test_precompose_matches_manual(self):
        fam = build("degraded_eaves").legal_family
        t = ClassicalChannel(("0", "1"), ("0", "1"), np.array([[0.8, 0.2], [0.3, 0.7]]))
        comp = precompose(fam.channels[0], t)
        want0 = 0.8 * fam.channels[0].output("0") + 0.2 * fam.channels[0].output("1")
        assert np.allclose(comp.output("0"), want0)

    def test_precompose_family_all_members(self):
        fam = build("xor_symmetrizable").legal_family
        t = ClassicalChannel(("0", "1"), ("0", "1"), np.array([[0.5, 0.5], [0.5, 0.5]]))
        out = precompose_family(fam, t)
        for ch in out.channels:
            assert np.allclose(ch.outputs[0], ch.outputs[1])

    def test_hat_block_structure(self):
        fam = build("xor_symmetrizable").legal_family
        t = ClassicalChannel(("0", "1"), ("0", "1"), np.array([[0.0, 1.0], [1.0, 0.0]]))
        blk = hat_precompose(fam, t, n=3)
        assert blk.block_length == 3
        # head is precomposed: input 0 behaves like raw input 1
        assert np.allclose(
            blk.head.channel("t0").output("0"), fam.channel("t0").output("1")
        )
        # tail stays raw
        assert np.allclose(
            blk.tail.channel("t0").output("0"), fam.channel("t0").output("0")
        )

    def test_hat_rejects_short_block(self):
        fam = build("xor_symmetrizable").legal_family
        t = ClassicalChannel.identity(("0", "1"))
        with pytest.raises(BadBlockLength):
            hat_precompose(fam, t, n=1)

    def test_hat_rejects_alphabet_change(self):
        fam = build("xor_symmetrizable").legal_family
        t = ClassicalChannel(("0", "1"), ("a", "b"), np.eye(2))
        with pytest.raises(AlphabetMismatch):
            hat_precompose(fam, t, n=2)


class TestSerialization:
    def test_round_trip_all_fixtures(self, tmp_path):
        for name in (
            "noiseless_vs_constant",
            "xor_symmetrizable",
            "degraded_eaves",
            "shift_symmetrizable",
            "legal_equals_eaves",
        ):
            pair = build(name)
            path = tmp_path / f"{name}.json"
            save_channel(pair, path)
            back = load_channel(path)
            assert back.states == pair.states
            assert back.inputs == pair.inputs
            for fam_a, fam_b in (
                (pair.legal_family, back.legal_family),
                (pair.eaves_family, back.eaves_family),
            ):
                assert np.array_equal(fam_a.stack(), fam_b.stack())

    def test_reload_of_shipped_fixture(self):
        pair = load_channel("fixtures/xor_symmetrizable.json")
        fresh = build("xor_symmetrizable")
        assert np.array_equal(pair.legal_family.stack(), fresh.legal_family.stack())

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ParseError):
            load_channel(path)

    def test_missing_key(self, tmp_path):
        path = tmp_path / "missing.json"
        path.write_text(json.dumps({"states": ["t0"]}))
        with pytest.raises(ParseError):
            load_channel(path)

    def test_invalid_state_inside_file(self, tmp_path):
        pair = build("noiseless_vs_constant")
        path = tmp_path / "tweaked.json"
        save_channel(pair, path)
        doc = json.loads(path.read_text())
        doc["legal"]["t0"]["0"][0][0] = [0.7, 0.0]
        path.write_text(json.dumps(doc))
        with pytest.raises((ParseError, TraceNotOne)):
            load_channel(path)

    def test_classical_round_trip(self, tmp_path):
        t = ClassicalChannel(("0", "1"), ("0", "1"), np.array([[0.8, 0.2], [0.3, 0.7]]))
        path = tmp_path / "t.json"
        save_classical(t, path)
        back = load_classical(path)
        assert back.inputs == t.inputs
        assert np.array_equal(back.matrix, t.matrix)


def test_random_family_round_trip(tmp_path):
    """Validation repairs may wobble the last ulp but the value is preserved."""
    rng = np.random.default_rng(101)
    chans = []
    for _ in range(3):
        outs = np.stack([random_density(3, rng).mat for _ in range(2)])
        chans.append(CQChannel(("0", "1"), outs))
    eaves = tuple(
        CQChannel(("0", "1"), np.stack([maximally_mixed(3).mat] * 2)) for _ in range(3)
    )
    pair = AVWiretapChannel(("t0", "t1", "t2"), tuple(chans), eaves, name="random3")
    first = tmp_path / "r1.json"
    second = tmp_path / "r2.json"
    save_channel(pair, first)
    back = load_channel(first)
    assert np.allclose(back.legal_family.stack(), pair.legal_family.stack(), atol=1e-14)
    assert back.name == "random3"
    save_channel(back, second)
    again = load_channel(second)
    assert np.allclose(again.legal_family.stack(), back.legal_family.stack(), atol=1e-14)
    assert np.array_equal(again.eaves_family.stack(), back.eaves_family.stack())


def test_same_file_loads_identically():
    """Determinism contract: one file, two loads, identical arrays."""
    a = load_channel("fixtures/degraded_eaves.json")
    b = load_channel("fixtures/degraded_eaves.json")
    assert np.array_equal(a.legal_family.stack(), b.legal_family.stack())
    assert np.array_equal(a.eaves_family.stack(), b.eaves_family.stack())
