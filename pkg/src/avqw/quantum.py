"""Density matrices, entropies and the small operator lemmas.

All logarithms are base 2.  Matrices are numpy complex128 arrays; the two
wrapper types below exist to mark data that has passed validation.  Most
functions also accept a bare ndarray and validate nothing beyond shape,
which keeps internal arithmetic cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_CONFIG, RunConfig
from .errors import (
    DimensionCap,
    DimensionMismatch,
    HypothesisViolated,
    NotHermitian,
    NotPSD,
    OutOfRange,
    TraceNotOne,
)
from .kernels import trace_norm_herm


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Unit-trace positive semidefinite matrix, validated on construction
    through `validate_density`."""

    mat: np.ndarray

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def __array__(self, dtype=None):
        return np.asarray(self.mat, dtype=dtype)


@dataclass(frozen=True, eq=False)
class PovmElement:
    """Hermitian matrix with spectrum inside [0, 1]."""

    mat: np.ndarray

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def __array__(self, dtype=None):
        return np.asarray(self.mat, dtype=dtype)


def as_matrix(x) -> np.ndarray:
    """Underlying complex matrix of a wrapper type or bare array."""
    if isinstance(x, (DensityMatrix, PovmElement)):
        return x.mat
    return np.asarray(x, dtype=np.complex128)


def validate_density(matrix, cfg: RunConfig = DEFAULT_CONFIG, location=None) -> DensityMatrix:
    """Check the density-matrix invariants and wrap the matrix.

    Deviations up to cfg.repair_tol are repaired: the matrix is symmetrized,
    negative eigenvalues are clipped to zero and the trace is renormalized.
    Larger deviations raise NotHermitian / NotPSD / TraceNotOne with the
    measured deviation.
    """
    m = np.asarray(as_matrix(matrix))
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch("expected a square matrix", location=location)
    d = m.shape[0]
    if d > cfg.dim_cap:
        raise DimensionCap(f"dimension {d} exceeds the cap {cfg.dim_cap}")
    m = m.astype(np.complex128, copy=True)

    herm_dev = float(np.max(np.abs(m - m.conj().T))) if d else 0.0
    if herm_dev > cfg.repair_tol:
        raise NotHermitian("matrix is not Hermitian", deviation=herm_dev, location=location)
    m = 0.5 * (m + m.conj().T)

    eigs, vecs = np.linalg.eigh(m)
    min_eig = float(eigs[0])
    if min_eig < -cfg.repair_tol:
        raise NotPSD("matrix has a negative eigenvalue", deviation=-min_eig, location=location)

    trace_dev = abs(float(np.real(np.trace(m))) - 1.0)
    if trace_dev > cfg.repair_tol:
        raise TraceNotOne("trace differs from one", deviation=trace_dev, location=location)

    if min_eig < 0.0:
        eigs = np.clip(eigs, 0.0, None)
        m = (vecs * eigs) @ vecs.conj().T
        m = 0.5 * (m + m.conj().T)
    tr = float(np.real(np.trace(m)))
    if tr != 1.0 and tr > 0.0:
        m = m / tr
    m.setflags(write=False)
    return DensityMatrix(m)


def validate_povm_element(matrix, cfg: RunConfig = DEFAULT_CONFIG, location=None) -> PovmElement:
    """Check Hermiticity and that the spectrum lies in [-tol, 1+tol]."""
    m = np.asarray(as_matrix(matrix)).astype(np.complex128, copy=True)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch("expected a square matrix", location=location)
    herm_dev = float(np.max(np.abs(m - m.conj().T)))
    if herm_dev > cfg.repair_tol:
        raise NotHermitian("POVM element is not Hermitian", deviation=herm_dev, location=location)
    m = 0.5 * (m + m.conj().T)
    eigs = np.linalg.eigvalsh(m)
    low = float(eigs[0])
    high = float(eigs[-1])
    if low < -cfg.repair_tol:
        raise NotPSD("POVM element has a negative eigenvalue", deviation=-low, location=location)
    if high > 1.0 + cfg.repair_tol:
        raise OutOfRange(
            "POVM element has an eigenvalue above one", deviation=high - 1.0, location=location
        )
    m.setflags(write=False)
    return PovmElement(m)


def entropy_of_spectrum(eigs: np.ndarray, cfg: RunConfig = DEFAULT_CONFIG) -> float:
    lam = np.asarray(eigs, dtype=np.float64)
    lam = lam[lam > cfg.entropy_floor]
    if lam.size == 0:
        return 0.0
    return float(-np.sum(lam * np.log2(lam)))


def von_neumann_entropy(rho, cfg: RunConfig = DEFAULT_CONFIG) -> float:
    """Entropy in bits, clamped to [0, log2 dim]."""
    m = as_matrix(rho)
    eigs = np.linalg.eigvalsh(m)
    s = entropy_of_spectrum(eigs, cfg)
    return float(min(max(s, 0.0), math.log2(m.shape[0]))) if m.shape[0] > 1 else 0.0


def batch_von_neumann(stack: np.ndarray, cfg: RunConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Entropies of a (..., d, d) stack of density matrices, clamped."""
    stack = np.asarray(stack)
    d = stack.shape[-1]
    eigs = np.linalg.eigvalsh(stack)
    safe = np.where(eigs > cfg.entropy_floor, eigs, 1.0)
    s = -np.sum(safe * np.log2(safe), axis=-1)
    return np.clip(s, 0.0, math.log2(d) if d > 1 else 0.0)


def trace_norm_distance(rho, sigma) -> float:
    """Trace norm of the difference of two Hermitian matrices."""
    a = as_matrix(rho)
    b = as_matrix(sigma)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shape {a.shape} vs {b.shape}")
    return float(trace_norm_herm(a - b))


def tensor(rho, sigma, cfg: RunConfig = DEFAULT_CONFIG) -> DensityMatrix:
    a = as_matrix(rho)
    b = as_matrix(sigma)
    d = a.shape[0] * b.shape[0]
    if d > cfg.dim_cap:
        raise DimensionCap(f"tensor dimension {d} exceeds the cap {cfg.dim_cap}")
    m = np.kron(a, b)
    m.setflags(write=False)
    return DensityMatrix(m)


def partial_trace(rho, dims, keep: int) -> DensityMatrix:
    """Trace out all tensor factors except `dims[keep]`."""
    m = as_matrix(rho)
    dims = tuple(int(d) for d in dims)
    if int(np.prod(dims)) != m.shape[0]:
        raise DimensionMismatch(f"factors {dims} do not multiply to {m.shape[0]}")
    if not 0 <= keep < len(dims):
        raise OutOfRange(f"keep index {keep} outside 0..{len(dims) - 1}")
    k = len(dims)
    tens = m.reshape(dims + dims)
    # contract row and column indices of every traced factor
    src_row = list(range(k))
    src_col = list(range(k, 2 * k))
    for i in range(k):
        if i != keep:
            src_col[i] = src_row[i]
    out = np.einsum(tens, src_row + src_col, [keep, k + keep])
    out = np.ascontiguousarray(out)
    out.setflags(write=False)
    return DensityMatrix(out)


def binary_entropy(nu: float) -> float:
    """Entropy in bits of a coin with bias nu."""
    if not 0.0 <= nu <= 1.0:
        raise OutOfRange(f"argument {nu} outside [0, 1]")
    if nu == 0.0 or nu == 1.0:
        return 0.0
    return float(-nu * math.log2(nu) - (1.0 - nu) * math.log2(1.0 - nu))


def fannes_audenaert_bound(mu: float, dim: int) -> float:
    """Entropy-continuity bound mu*log2(dim-1) + h(mu).

    `mu` is half the trace-norm distance and must lie in [0, 1/e); the
    bound's closed form is only used on that branch.
    """
    if dim < 2:
        raise OutOfRange(f"dimension {dim} below 2")
    if mu < 0.0 or mu >= 1.0 / math.e:
        raise OutOfRange(f"mu {mu} outside [0, 1/e)")
    if mu == 0.0:
        return 0.0
    return float(mu * math.log2(dim - 1) + binary_entropy(mu))


def gentle_operator_check(rho, x, cfg: RunConfig = DEFAULT_CONFIG) -> tuple[float, float]:
    """Both sides of the gentle-measurement inequality.

    Returns (lhs, rhs) with lhs = ||rho - sqrt(X) rho sqrt(X)||_1 and
    rhs = sqrt(2 * (1 - tr(rho X))).  Raises HypothesisViolated when X is
    not an effect operator or the disturbed mass leaves [0, 1].
    """
    r = as_matrix(rho)
    m = as_matrix(x)
    if r.shape != m.shape:
        raise DimensionMismatch(f"shape {r.shape} vs {m.shape}")
    herm_dev = float(np.max(np.abs(m - m.conj().T)))
    if herm_dev > cfg.repair_tol:
        raise HypothesisViolated(f"X is not Hermitian (deviation {herm_dev:.3e})")
    m = 0.5 * (m + m.conj().T)
    eigs, vecs = np.linalg.eigh(m)
    if eigs[0] < -cfg.repair_tol:
        raise HypothesisViolated(f"X has negative eigenvalue {eigs[0]:.3e}")
    if eigs[-1] > 1.0 + cfg.repair_tol:
        raise HypothesisViolated(f"X has eigenvalue {eigs[-1]:.3e} above one")
    lam = 1.0 - float(np.real(np.trace(r @ m)))
    if lam < -cfg.repair_tol or lam > 1.0 + cfg.repair_tol:
        raise HypothesisViolated(f"disturbed mass {lam:.3e} outside [0, 1]")
    lam = min(max(lam, 0.0), 1.0)
    sqrt_x = (vecs * np.sqrt(np.clip(eigs, 0.0, None))) @ vecs.conj().T
    lhs = float(trace_norm_herm(r - sqrt_x @ r @ sqrt_x))
    rhs = math.sqrt(2.0 * lam)
    return lhs, rhs


# ---------------------------------------------------------------------------
# small constructors used across the package and its tests
# ---------------------------------------------------------------------------


def basis_projector(dim: int, k: int) -> DensityMatrix:
    m = np.zeros((dim, dim), dtype=np.complex128)
    m[k, k] = 1.0
    m.setflags(write=False)
    return DensityMatrix(m)


def pure_state(vec) -> DensityMatrix:
    v = np.asarray(vec, dtype=np.complex128)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise OutOfRange("zero vector cannot be normalized")
    v = v / n
    m = np.outer(v, v.conj())
    m.setflags(write=False)
    return DensityMatrix(m)


def maximally_mixed(dim: int) -> DensityMatrix:
    m = np.eye(dim, dtype=np.complex128) / dim
    m.setflags(write=False)
    return DensityMatrix(m)


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Full-rank (or fixed-rank) state drawn from the Ginibre ensemble."""
    r = rank if rank is not None else dim
    g = rng.standard_normal((dim, r)) + 1j * rng.standard_normal((dim, r))
    m = g @ g.conj().T
    m = m / np.real(np.trace(m))
    m = 0.5 * (m + m.conj().T)
    m.setflags(write=False)
    return DensityMatrix(m)


def random_pure(dim: int, rng: np.random.Generator) -> DensityMatrix:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return pure_state(v)
