"""Named hand-built channel instances shipped with the package.

Every builder returns a fresh AVWiretapChannel; write_all serializes the
whole set as JSON fixtures.  The pair (shift_symmetrizable,
legal_equals_eaves) is the shipped super-activation candidate: the first
factor is symmetrizable with a positive randomness-assisted rate, the
second has rate zero with a non-symmetrizable legal part, and their
product is non-symmetrizable with rate at least one half.
"""

from __future__ import annotations

import os

import numpy as np

from .channels import AVWiretapChannel, CQChannel, save_channel

_IN = ("0", "1")


def _proj(dim: int, k: int) -> np.ndarray:
    m = np.zeros((dim, dim), dtype=np.complex128)
    m[k, k] = 1.0
    return m


def _mixed(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=np.complex128) / dim


def noiseless_vs_constant() -> AVWiretapChannel:
    """Single-state pair: legal reads the bit exactly, eavesdropper sees nothing."""
    legal = CQChannel(_IN, np.stack([_proj(2, 0), _proj(2, 1)]))
    eaves = CQChannel(_IN, np.stack([_mixed(2), _mixed(2)]))
    return AVWiretapChannel(("t0",), (legal,), (eaves,), name="noiseless_vs_constant")


def xor_symmetrizable() -> AVWiretapChannel:
    """Legal output is input XOR state; swapping input and state roles
    symmetrizes the family, so deterministic capacity is zero."""
    w0 = CQChannel(_IN, np.stack([_proj(2, 0), _proj(2, 1)]))
    w1 = CQChannel(_IN, np.stack([_proj(2, 1), _proj(2, 0)]))
    eaves = CQChannel(_IN, np.stack([_mixed(2), _mixed(2)]))
    return AVWiretapChannel(("t0", "t1"), (w0, w1), (eaves, eaves), name="xor_symmetrizable")


def degraded_eaves() -> AVWiretapChannel:
    """Eavesdropper sees the legal output through 50 percent depolarizing."""
    legal = CQChannel(_IN, np.stack([_proj(2, 0), _proj(2, 1)]))
    v = np.stack([0.5 * _proj(2, 0) + 0.5 * _mixed(2), 0.5 * _proj(2, 1) + 0.5 * _mixed(2)])
    eaves = CQChannel(_IN, v)
    return AVWiretapChannel(("t0",), (legal,), (eaves,), name="degraded_eaves")


def shift_symmetrizable() -> AVWiretapChannel:
    """Legal output is |input + state> in dimension 3.

    Symmetrizable by the identity assignment state := input, yet the
    randomness-assisted rate stays at one half because the adversary
    mixture can never fully hide the input.
    """
    w0 = CQChannel(_IN, np.stack([_proj(3, 0), _proj(3, 1)]))
    w1 = CQChannel(_IN, np.stack([_proj(3, 1), _proj(3, 2)]))
    eaves = CQChannel(_IN, np.stack([_mixed(3), _mixed(3)]))
    return AVWiretapChannel(("t0", "t1"), (w0, w1), (eaves, eaves), name="shift_symmetrizable")


def legal_equals_eaves() -> AVWiretapChannel:
    """Both receivers get the same noiseless qubit; secrecy rate is zero."""
    ch = CQChannel(_IN, np.stack([_proj(2, 0), _proj(2, 1)]))
    return AVWiretapChannel(("t0",), (ch,), (ch,), name="legal_equals_eaves")


BUILDERS = {
    "noiseless_vs_constant": noiseless_vs_constant,
    "xor_symmetrizable": xor_symmetrizable,
    "degraded_eaves": degraded_eaves,
    "shift_symmetrizable": shift_symmetrizable,
    "legal_equals_eaves": legal_equals_eaves,
}


def build(name: str) -> AVWiretapChannel:
    if name not in BUILDERS:
        raise KeyError(f"unknown fixture {name!r}; have {sorted(BUILDERS)}")
    return BUILDERS[name]()


def write_all(dirpath: str) -> list[str]:
    os.makedirs(dirpath, exist_ok=True)
    written = []
    for name, builder in sorted(BUILDERS.items()):
        path = os.path.join(dirpath, f"{name}.json")
        save_channel(builder(), path)
        written.append(path)
    return written
