"""Channel types and the operations that combine them.

A classical-quantum channel maps each input symbol to a density matrix.
An arbitrarily varying wiretap channel is a finite family of such pairs
(legal, eavesdropper), indexed by a state label the jammer controls per
transmitted letter.  n-fold outputs are built on demand and never stored
as a family.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_CONFIG, RunConfig
from .errors import (
    AlphabetMismatch,
    BadBlockLength,
    DimensionCap,
    LengthMismatch,
    OutOfRange,
    ParseError,
    ValidationError,
)
from .quantum import DensityMatrix, validate_density

Labels = tuple[str, ...]


def _as_labels(labels, what: str) -> Labels:
    out = tuple(str(x) for x in labels)
    if len(out) == 0:
        raise ValidationError(f"{what} must be nonempty")
    if len(set(out)) != len(out):
        raise ValidationError(f"{what} contains duplicate labels")
    return out


@dataclass(eq=False)
class ProbabilityDistribution:
    """Distribution over an ordered label list."""

    support: Labels
    weights: np.ndarray

    def __post_init__(self):
        self.support = _as_labels(self.support, "support")
        w = np.asarray(self.weights, dtype=np.float64).copy()
        if w.shape != (len(self.support),):
            raise LengthMismatch(f"{len(self.support)} labels but {w.shape} weights")
        low = float(w.min())
        if low < -DEFAULT_CONFIG.trace_tol:
            raise OutOfRange("negative probability", deviation=-low)
        w = np.clip(w, 0.0, None)
        dev = abs(float(w.sum()) - 1.0)
        if dev > DEFAULT_CONFIG.trace_tol:
            raise ValidationError("weights do not sum to one", deviation=dev)
        w.setflags(write=False)
        self.weights = w

    @classmethod
    def uniform(cls, labels) -> "ProbabilityDistribution":
        labels = tuple(labels)
        n = len(labels)
        return cls(labels, np.full(n, 1.0 / n))

    @classmethod
    def point_mass(cls, labels, label) -> "ProbabilityDistribution":
        labels = tuple(labels)
        w = np.zeros(len(labels))
        w[labels.index(label)] = 1.0
        return cls(labels, w)

    def weight(self, label) -> float:
        return float(self.weights[self.support.index(label)])


@dataclass(eq=False)
class CQChannel:
    """Classical input alphabet, one output density matrix per symbol."""

    inputs: Labels
    outputs: np.ndarray  # (n_inputs, dim, dim) complex128

    def __post_init__(self):
        self.inputs = _as_labels(self.inputs, "inputs")
        arr = np.asarray(self.outputs, dtype=np.complex128)
        if arr.ndim != 3 or arr.shape[0] != len(self.inputs) or arr.shape[1] != arr.shape[2]:
            raise LengthMismatch(f"outputs shape {arr.shape} does not match {len(self.inputs)} inputs")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        self.outputs = arr

    @classmethod
    def validated(cls, inputs, matrices, cfg: RunConfig = DEFAULT_CONFIG, location="channel"):
        inputs = _as_labels(inputs, "inputs")
        mats = []
        for label, m in zip(inputs, matrices):
            dm = validate_density(m, cfg, location=f"{location}.{label}")
            mats.append(dm.mat)
        return cls(inputs, np.stack(mats))

    @property
    def dim(self) -> int:
        return self.outputs.shape[1]

    def output(self, label) -> np.ndarray:
        return self.outputs[self.inputs.index(label)]


@dataclass(eq=False)
class ClassicalChannel:
    """Row-stochastic matrix between two label alphabets."""

    inputs: Labels
    output_labels: Labels
    matrix: np.ndarray  # (n_inputs, n_outputs)

    def __post_init__(self):
        self.inputs = _as_labels(self.inputs, "inputs")
        self.output_labels = _as_labels(self.output_labels, "outputs")
        m = np.asarray(self.matrix, dtype=np.float64).copy()
        if m.shape != (len(self.inputs), len(self.output_labels)):
            raise LengthMismatch(f"matrix shape {m.shape} does not match alphabets")
        low = float(m.min())
        if low < -DEFAULT_CONFIG.trace_tol:
            raise OutOfRange("negative transition probability", deviation=-low)
        m = np.clip(m, 0.0, None)
        dev = float(np.max(np.abs(m.sum(axis=1) - 1.0)))
        if dev > DEFAULT_CONFIG.trace_tol:
            raise ValidationError("rows do not sum to one", deviation=dev)
        m.setflags(write=False)
        self.matrix = m

    @classmethod
    def identity(cls, labels) -> "ClassicalChannel":
        labels = tuple(labels)
        return cls(labels, labels, np.eye(len(labels)))


@dataclass(eq=False)
class ChannelFamily:
    """State-indexed collection of cq channels over one input alphabet."""

    states: Labels
    channels: tuple[CQChannel, ...]
    _stack: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.states = _as_labels(self.states, "states")
        self.channels = tuple(self.channels)
        if len(self.channels) != len(self.states):
            raise LengthMismatch(f"{len(self.states)} states but {len(self.channels)} channels")
        first = self.channels[0]
        for ch in self.channels[1:]:
            if ch.inputs != first.inputs:
                raise AlphabetMismatch("family members use different input alphabets")
            if ch.dim != first.dim:
                raise ValidationError("family members have different output dimensions")

    @property
    def inputs(self) -> Labels:
        return self.channels[0].inputs

    @property
    def dim(self) -> int:
        return self.channels[0].dim

    @property
    def size(self) -> int:
        return len(self.states)

    def channel(self, state) -> CQChannel:
        return self.channels[self.states.index(state)]

    def stack(self) -> np.ndarray:
        """(T, nA, d, d) view of all outputs, built once."""
        if self._stack is None:
            arr = np.stack([ch.outputs for ch in self.channels])
            arr.setflags(write=False)
            self._stack = arr
        return self._stack


@dataclass(eq=False)
class AVWiretapChannel:
    """Paired legal/eavesdropper families over a common state set."""

    states: Labels
    legal: tuple[CQChannel, ...]
    eaves: tuple[CQChannel, ...]
    name: str = ""

    def __post_init__(self):
        self.states = _as_labels(self.states, "states")
        self.legal = tuple(self.legal)
        self.eaves = tuple(self.eaves)
        self._legal_family = ChannelFamily(self.states, self.legal)
        self._eaves_family = ChannelFamily(self.states, self.eaves)
        if self._legal_family.inputs != self._eaves_family.inputs:
            raise AlphabetMismatch("legal and eavesdropper input alphabets differ")

    @property
    def inputs(self) -> Labels:
        return self._legal_family.inputs

    @property
    def legal_dim(self) -> int:
        return self._legal_family.dim

    @property
    def eaves_dim(self) -> int:
        return self._eaves_family.dim

    @property
    def legal_family(self) -> ChannelFamily:
        return self._legal_family

    @property
    def eaves_family(self) -> ChannelFamily:
        return self._eaves_family


@dataclass(eq=False)
class HatBlock:
    """Block channel whose first n-1 slots are preprocessed, last slot raw."""

    head: ChannelFamily
    tail: ChannelFamily
    block_length: int


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def apply(channel: CQChannel, p: ProbabilityDistribution) -> DensityMatrix:
    """Average output state under input distribution p."""
    if p.support != channel.inputs:
        raise AlphabetMismatch(f"distribution over {p.support} fed to alphabet {channel.inputs}")
    m = np.einsum("a,ars->rs", p.weights, channel.outputs)
    m = np.ascontiguousarray(m)
    m.setflags(write=False)
    return DensityMatrix(m)


def mix_states(family: ChannelFamily, q: ProbabilityDistribution) -> CQChannel:
    """Jammer mixture: one cq channel with outputs averaged over states."""
    if q.support != family.states:
        raise AlphabetMismatch(f"mixture over {q.support} fed to states {family.states}")
    outputs = np.einsum("t,tars->ars", q.weights, family.stack())
    return CQChannel(family.inputs, outputs)


def n_fold_output(
    family: ChannelFamily, pattern, word, cfg: RunConfig = DEFAULT_CONFIG
) -> DensityMatrix:
    """Product output for a state pattern and an input word of equal length."""
    pattern = tuple(pattern)
    word = tuple(word)
    if len(pattern) != len(word):
        raise LengthMismatch(f"pattern length {len(pattern)} vs word length {len(word)}")
    if len(pattern) == 0:
        raise LengthMismatch("empty pattern")
    dim = family.dim ** len(pattern)
    if dim > cfg.max_dim:
        raise DimensionCap(f"n-fold dimension {dim} exceeds the cap {cfg.max_dim}")
    try:
        t_idx = [family.states.index(str(t)) for t in pattern]
        a_idx = [family.inputs.index(str(a)) for a in word]
    except ValueError as exc:
        raise AlphabetMismatch(str(exc)) from exc
    stack = family.stack()
    out = stack[t_idx[0], a_idx[0]]
    for t, a in zip(t_idx[1:], a_idx[1:]):
        out = np.kron(out, stack[t, a])
    out = np.ascontiguousarray(out)
    out.setflags(write=False)
    return DensityMatrix(out)


def pair_label(x: str, y: str) -> str:
    return f"({x},{y})"


def tensor_channels(
    ch1: AVWiretapChannel, ch2: AVWiretapChannel, cfg: RunConfig = DEFAULT_CONFIG
) -> AVWiretapChannel:
    """Product channel: states, inputs and outputs all tensorize."""
    ldim = ch1.legal_dim * ch2.legal_dim
    edim = ch1.eaves_dim * ch2.eaves_dim
    if max(ldim, edim) > cfg.dim_cap:
        raise DimensionCap(f"product dimension {max(ldim, edim)} exceeds the cap {cfg.dim_cap}")
    states = tuple(pair_label(s, t) for s in ch1.states for t in ch2.states)
    inputs = tuple(pair_label(a, b) for a in ch1.inputs for b in ch2.inputs)

    def build(side1, side2):
        chans = []
        for c1 in side1:
            for c2 in side2:
                outs = np.stack(
                    [np.kron(c1.outputs[i], c2.outputs[j])
                     for i in range(len(ch1.inputs))
                     for j in range(len(ch2.inputs))]
                )
                chans.append(CQChannel(inputs, outs))
        return tuple(chans)

    name = f"{ch1.name or 'ch1'}*{ch2.name or 'ch2'}"
    return AVWiretapChannel(states, build(ch1.legal, ch2.legal), build(ch1.eaves, ch2.eaves), name)


def precompose(channel: CQChannel, t: ClassicalChannel) -> CQChannel:
    """Feed the classical channel's output into the cq channel."""
    if t.output_labels != channel.inputs:
        raise AlphabetMismatch(
            f"preprocessing outputs {t.output_labels} vs channel inputs {channel.inputs}"
        )
    outputs = np.einsum("ua,ars->urs", t.matrix, channel.outputs)
    return CQChannel(t.inputs, outputs)


def precompose_family(family: ChannelFamily, t: ClassicalChannel) -> ChannelFamily:
    return ChannelFamily(family.states, tuple(precompose(ch, t) for ch in family.channels))


def hat_precompose(family: ChannelFamily, t: ClassicalChannel, n: int) -> HatBlock:
    """Preprocess the first n-1 slots of an n-block, leave the last raw.

    Keeping one raw slot preserves non-symmetrizability of the family no
    matter what the preprocessing does on the other slots.
    """
    if n < 2:
        raise BadBlockLength(f"block length {n} below 2")
    if t.inputs != t.output_labels or t.output_labels != family.inputs:
        # the raw slot forces input and output alphabets to coincide
        raise AlphabetMismatch("preprocessing must map the channel alphabet to itself")
    return HatBlock(head=precompose_family(family, t), tail=family, block_length=n)


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------


def _matrix_to_json(m: np.ndarray) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(m)]


def _matrix_from_json(obj, dim: int, where: str) -> np.ndarray:
    if not isinstance(obj, list) or len(obj) != dim:
        raise ParseError(f"{where}: expected {dim} matrix rows")
    out = np.zeros((dim, dim), dtype=np.complex128)
    for r, row in enumerate(obj):
        if not isinstance(row, list) or len(row) != dim:
            raise ParseError(f"{where}: row {r} must hold {dim} entries")
        for c, entry in enumerate(row):
            if (
                not isinstance(entry, list)
                or len(entry) != 2
                or not all(isinstance(v, (int, float)) for v in entry)
            ):
                raise ParseError(f"{where}: entry [{r}][{c}] must be [re, im]")
            out[r, c] = complex(entry[0], entry[1])
    return out


def _require(doc: dict, key: str, kind, where: str):
    if key not in doc:
        raise ParseError(f"{where}: missing field '{key}'")
    value = doc[key]
    if not isinstance(value, kind):
        raise ParseError(f"{where}.{key}: expected {kind.__name__}")
    return value


def _side_from_json(doc, side: str, states, inputs, dim, cfg) -> tuple[CQChannel, ...]:
    table = _require(doc, side, dict, "channel")
    chans = []
    for s in states:
        if s not in table:
            raise ParseError(f"{side}: missing state '{s}'")
        row = table[s]
        if not isinstance(row, dict):
            raise ParseError(f"{side}.{s}: expected an object keyed by input")
        mats = []
        for a in inputs:
            if a not in row:
                raise ParseError(f"{side}.{s}: missing input '{a}'")
            mats.append(_matrix_from_json(row[a], dim, f"{side}.{s}.{a}"))
        chans.append(CQChannel.validated(inputs, mats, cfg, location=f"{side}.{s}"))
    return tuple(chans)


def load_channel(path, cfg: RunConfig = DEFAULT_CONFIG) -> AVWiretapChannel:
    """Read a wiretap channel from its JSON description."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: top level must be an object")
    name = _require(doc, "name", str, "channel")
    inputs = tuple(str(x) for x in _require(doc, "inputs", list, "channel"))
    states = tuple(str(x) for x in _require(doc, "states", list, "channel"))
    legal_dim = _require(doc, "legal_dim", int, "channel")
    eaves_dim = _require(doc, "eaves_dim", int, "channel")
    legal = _side_from_json(doc, "legal", states, inputs, legal_dim, cfg)
    eaves = _side_from_json(doc, "eaves", states, inputs, eaves_dim, cfg)
    return AVWiretapChannel(states, legal, eaves, name)


def save_channel(channel: AVWiretapChannel, path) -> None:
    """Write the JSON description; decimal text round-trips bit-exactly."""
    doc = {
        "name": channel.name,
        "inputs": list(channel.inputs),
        "states": list(channel.states),
        "legal_dim": channel.legal_dim,
        "eaves_dim": channel.eaves_dim,
        "legal": {
            s: {a: _matrix_to_json(ch.output(a)) for a in channel.inputs}
            for s, ch in zip(channel.states, channel.legal)
        },
        "eaves": {
            s: {a: _matrix_to_json(ch.output(a)) for a in channel.inputs}
            for s, ch in zip(channel.states, channel.eaves)
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_classical(path) -> ClassicalChannel:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    inputs = tuple(str(x) for x in _require(doc, "inputs", list, "classical"))
    outputs = tuple(str(x) for x in _require(doc, "outputs", list, "classical"))
    matrix = _require(doc, "matrix", list, "classical")
    try:
        m = np.asarray(matrix, dtype=np.float64)
    except ValueError as exc:
        raise ParseError(f"classical.matrix: not a numeric table ({exc})") from exc
    return ClassicalChannel(inputs, outputs, m)


def save_classical(channel: ClassicalChannel, path) -> None:
    doc = {
        "inputs": list(channel.inputs),
        "outputs": list(channel.output_labels),
        "matrix": [[float(v) for v in row] for row in channel.matrix],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
