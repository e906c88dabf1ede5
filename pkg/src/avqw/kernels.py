"""Hot numeric kernels with two interchangeable backends.

The default backend compiles the inner loops with numba's @njit.  Setting
the environment variable AVQW_PURE_NUMPY=1 (before import) selects a pure
numpy path instead: the loop kernels run as plain Python and the grid scan
switches to a chunked, vectorized implementation.  Both backends produce
the same values; `benchmarks/bench_kernels.py` compares their speed.

Conventions used throughout:
  outputs  complex128 array of shape (T, nA, d, d); outputs[t, a] is the
           output state of family member t at input symbol a
  tau      float64 array of shape (nA, T); row a is a distribution over
           the T family members
  mixed    complex128 array of shape (G, nA, d, d); mixed[g, a] is the
           tau-row-g mixture of the family evaluated at input a
"""

from __future__ import annotations

import math
import os

import numpy as np

__all__ = [
    "BACKEND",
    "trace_norm_herm",
    "batch_trace_norm_herm",
    "project_rows",
    "residual_max",
    "surrogate_value",
    "surrogate_value_grad",
    "surrogate_descent",
    "polish_descent",
    "grid_scan",
    "mix_grid",
    "simplex_grid",
    "count_simplex_grid",
    "warmup",
]


def _pure_numpy_requested() -> bool:
    return os.environ.get("AVQW_PURE_NUMPY", "").strip().lower() in {"1", "true", "yes", "on"}


# ---------------------------------------------------------------------------
# reference implementations, written in a style numba can compile directly
# ---------------------------------------------------------------------------


def _trace_norm_herm(h):
    """Trace norm of a Hermitian matrix (sum of absolute eigenvalues)."""
    d = h.shape[0]
    if d == 2:
        x = h[0, 0].real
        y = h[1, 1].real
        b = h[0, 1]
        m = 0.5 * (x + y)
        r = math.sqrt(0.25 * (x - y) * (x - y) + b.real * b.real + b.imag * b.imag)
        return abs(m + r) + abs(m - r)
    w = np.linalg.eigvalsh(h)
    s = 0.0
    for i in range(w.shape[0]):
        s += abs(w[i])
    return s


def _project_row(v):
    """Euclidean projection of a vector onto the probability simplex."""
    n = v.shape[0]
    u = np.sort(v)[::-1]
    css = 0.0
    theta = 0.0
    for k in range(n):
        css += u[k]
        t = (css - 1.0) / (k + 1.0)
        if u[k] - t > 0.0:
            theta = t
    out = np.empty(n)
    for k in range(n):
        val = v[k] - theta
        out[k] = val if val > 0.0 else 0.0
    return out


def _project_rows(mat):
    out = np.empty_like(mat)
    for a in range(mat.shape[0]):
        out[a] = _project_row(mat[a])
    return out


def _mix_rows(outputs, tau):
    """mixed[a, c] = sum_t tau[a, t] * outputs[t, c]."""
    T, nA, d, _ = outputs.shape
    mixed = np.zeros((nA, nA, d, d), dtype=np.complex128)
    for a in range(nA):
        for t in range(T):
            w = tau[a, t]
            if w != 0.0:
                for c in range(nA):
                    mixed[a, c] += w * outputs[t, c]
    return mixed


def _residual_max(outputs, tau):
    """Largest pairwise symmetrization defect under tau.

    Returns (value, a, b) where (a, b) with a < b is the lexicographically
    first maximizing input pair.
    """
    nA = outputs.shape[1]
    mixed = _mix_rows(outputs, tau)
    best = 0.0
    bi = 0
    bj = 0
    first = True
    for i in range(nA):
        for j in range(i + 1, nA):
            delta = mixed[i, j] - mixed[j, i]
            v = _trace_norm_herm(delta)
            if first or v > best:
                best = v
                bi = i
                bj = j
                first = False
    if first:
        return 0.0, 0, 0
    return best, bi, bj


def _surrogate_value(outputs, tau):
    """Sum of squared Frobenius norms of all pairwise defects."""
    nA = outputs.shape[1]
    d = outputs.shape[2]
    mixed = _mix_rows(outputs, tau)
    g = 0.0
    for i in range(nA):
        for j in range(i + 1, nA):
            delta = mixed[i, j] - mixed[j, i]
            for r in range(d):
                for c in range(d):
                    v = delta[r, c]
                    g += v.real * v.real + v.imag * v.imag
    return g


def _surrogate_value_grad(outputs, tau):
    T, nA, d, _ = outputs.shape
    mixed = _mix_rows(outputs, tau)
    g = 0.0
    grad = np.zeros((nA, T))
    for i in range(nA):
        for j in range(nA):
            if i == j:
                continue
            delta = mixed[i, j] - mixed[j, i]
            if j > i:
                for r in range(d):
                    for c in range(d):
                        v = delta[r, c]
                        g += v.real * v.real + v.imag * v.imag
            for t in range(T):
                wt = outputs[t, j]
                acc = 0.0
                for r in range(d):
                    for c in range(d):
                        acc += (delta[r, c].conjugate() * wt[r, c]).real
                grad[i, t] += 2.0 * acc
    return g, grad


def _surrogate_descent(outputs, tau0, max_iters, gtol):
    """Projected gradient descent on the smooth surrogate.

    The surrogate is convex in tau, so this reliably detects the zero set.
    Returns (tau, value, iterations, gradient_mapping_norm).
    """
    tau = _project_rows(tau0)
    g, grad = _surrogate_value_grad(outputs, tau)
    step = 1.0
    gm_norm = 0.0
    it = 0
    while it < max_iters:
        it += 1
        accepted = False
        gc = 0.0
        cand = tau
        sq = 0.0
        for _ in range(60):
            cand = _project_rows(tau - step * grad)
            sq = 0.0
            inner = 0.0
            for a in range(cand.shape[0]):
                for t in range(cand.shape[1]):
                    dlt = cand[a, t] - tau[a, t]
                    sq += dlt * dlt
                    inner += grad[a, t] * dlt
            gc = _surrogate_value(outputs, cand)
            if gc <= g + inner + 0.5 * sq / step + 1e-15 * (1.0 + abs(g)):
                accepted = True
                break
            step *= 0.5
        gm_norm = math.sqrt(sq) / step
        if not accepted:
            break
        tau = cand
        g = gc
        _, grad = _surrogate_value_grad(outputs, tau)
        if gm_norm <= gtol or g <= 1e-26:
            break
        step = min(step * 1.3, 1e6)
    return tau, g, it, gm_norm


def _polish_descent(outputs, tau0, iters):
    """Projected subgradient descent on the true max-trace-norm residual.

    The residual is convex but nonsmooth; uses diminishing steps scaled by
    the first subgradient and keeps the best iterate.
    Returns (best_tau, best_value).
    """
    T, nA, d, _ = outputs.shape
    tau = tau0.copy()
    best_val, bi, bj = _residual_max(outputs, tau)
    best_tau = tau.copy()
    if best_val <= 1e-13 or nA < 2:
        return best_tau, best_val
    step0 = -1.0
    val = best_val
    for k in range(iters):
        mixed = _mix_rows(outputs, tau)
        delta = mixed[bi, bj] - mixed[bj, bi]
        w, u = np.linalg.eigh(delta)
        sign = np.zeros((d, d), dtype=np.complex128)
        for e in range(d):
            s = 0.0
            if w[e] > 0.0:
                s = 1.0
            elif w[e] < 0.0:
                s = -1.0
            if s != 0.0:
                for r in range(d):
                    for c in range(d):
                        sign[r, c] += s * u[r, e] * u[c, e].conjugate()
        grad = np.zeros((nA, T))
        for t in range(T):
            acc_j = 0.0
            acc_i = 0.0
            for r in range(d):
                for c in range(d):
                    acc_j += (sign[r, c] * outputs[t, bj][c, r]).real
                    acc_i += (sign[r, c] * outputs[t, bi][c, r]).real
            grad[bi, t] = acc_j
            grad[bj, t] = -acc_i
        gnorm_sq = 0.0
        for a in range(nA):
            for t in range(T):
                gnorm_sq += grad[a, t] * grad[a, t]
        if gnorm_sq <= 1e-24:
            break
        if step0 < 0.0:
            step0 = val / gnorm_sq
        step = step0 / math.sqrt(k + 1.0)
        tau = _project_rows(tau - step * grad)
        val, bi, bj = _residual_max(outputs, tau)
        if val < best_val:
            best_val = val
            best_tau = tau.copy()
        if best_val <= 1e-13:
            break
    return best_tau, best_val


def _grid_scan_loop(mixed):
    """Minimum residual over all row assignments drawn from one grid.

    mixed has shape (G, nA, d, d).  Assignments are enumerated in C order
    (the index of the last input row varies fastest); returns the value and
    the flat index of the first minimizer.
    """
    G, nA, d, _ = mixed.shape
    idx = np.zeros(nA, dtype=np.int64)
    total = 1
    for _ in range(nA):
        total *= G
    best = np.inf
    best_flat = 0
    for flat in range(total):
        val = 0.0
        pruned = False
        for i in range(nA):
            if pruned:
                break
            for j in range(i + 1, nA):
                delta = mixed[idx[i], j] - mixed[idx[j], i]
                v = _trace_norm_herm(delta)
                if v > val:
                    val = v
                    if val >= best:
                        pruned = True
                        break
        if val < best:
            best = val
            best_flat = flat
        k = nA - 1
        while k >= 0:
            idx[k] += 1
            if idx[k] < G:
                break
            idx[k] = 0
            k -= 1
    return best, best_flat


# ---------------------------------------------------------------------------
# numpy-only vectorized pieces
# ---------------------------------------------------------------------------


def batch_trace_norm_herm(stack):
    """Trace norms of a (..., d, d) stack of Hermitian matrices."""
    stack = np.asarray(stack)
    d = stack.shape[-1]
    if d == 2:
        x = stack[..., 0, 0].real
        y = stack[..., 1, 1].real
        b = stack[..., 0, 1]
        m = 0.5 * (x + y)
        r = np.sqrt(0.25 * (x - y) ** 2 + b.real**2 + b.imag**2)
        return np.abs(m + r) + np.abs(m - r)
    return np.abs(np.linalg.eigvalsh(stack)).sum(axis=-1)


def _grid_scan_numpy(mixed, chunk=131072):
    G, nA, d, _ = mixed.shape
    total = G**nA
    shape = (G,) * nA
    best = np.inf
    best_flat = 0
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total))
        idx = np.unravel_index(flat, shape)
        val = np.zeros(flat.shape[0])
        for i in range(nA):
            for j in range(i + 1, nA):
                delta = mixed[idx[i], j] - mixed[idx[j], i]
                np.maximum(val, batch_trace_norm_herm(delta), out=val)
        k = int(np.argmin(val))
        if val[k] < best:
            best = float(val[k])
            best_flat = int(flat[k])
    return best, best_flat


def _project_rows_numpy(mat):
    """Vectorized row-wise simplex projection (sorted-threshold rule)."""
    mat = np.asarray(mat, dtype=np.float64)
    n = mat.shape[1]
    u = np.sort(mat, axis=1)[:, ::-1]
    css = np.cumsum(u, axis=1) - 1.0
    ks = np.arange(1, n + 1)
    cond = u - css / ks > 0.0
    rho = n - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(mat.shape[0]), rho] / (rho + 1.0)
    return np.maximum(mat - theta[:, None], 0.0)


# ---------------------------------------------------------------------------
# backend selection
# ---------------------------------------------------------------------------

BACKEND = "numpy"
_nb_trace_norm = None

if not _pure_numpy_requested():
    try:
        import numba

        _jit = numba.njit(cache=True, nogil=True)
        _trace_norm_herm = _jit(_trace_norm_herm)
        _project_row = _jit(_project_row)
        _project_rows = _jit(_project_rows)
        _mix_rows = _jit(_mix_rows)
        _residual_max = _jit(_residual_max)
        _surrogate_value = _jit(_surrogate_value)
        _surrogate_value_grad = _jit(_surrogate_value_grad)
        _surrogate_descent = _jit(_surrogate_descent)
        _polish_descent = _jit(_polish_descent)
        _grid_scan_loop = _jit(_grid_scan_loop)
        BACKEND = "numba"
    except ImportError:
        pass


def trace_norm_herm(h):
    return _trace_norm_herm(np.ascontiguousarray(h, dtype=np.complex128))


def project_rows(mat):
    mat = np.ascontiguousarray(mat, dtype=np.float64)
    if BACKEND == "numba":
        return _project_rows(mat)
    return _project_rows_numpy(mat)


def residual_max(outputs, tau):
    return _residual_max(
        np.ascontiguousarray(outputs, dtype=np.complex128),
        np.ascontiguousarray(tau, dtype=np.float64),
    )


def surrogate_value(outputs, tau):
    return _surrogate_value(
        np.ascontiguousarray(outputs, dtype=np.complex128),
        np.ascontiguousarray(tau, dtype=np.float64),
    )


def surrogate_value_grad(outputs, tau):
    return _surrogate_value_grad(
        np.ascontiguousarray(outputs, dtype=np.complex128),
        np.ascontiguousarray(tau, dtype=np.float64),
    )


def surrogate_descent(outputs, tau0, max_iters, gtol):
    return _surrogate_descent(
        np.ascontiguousarray(outputs, dtype=np.complex128),
        np.ascontiguousarray(tau0, dtype=np.float64),
        max_iters,
        gtol,
    )


def polish_descent(outputs, tau0, iters):
    return _polish_descent(
        np.ascontiguousarray(outputs, dtype=np.complex128),
        np.ascontiguousarray(tau0, dtype=np.float64),
        iters,
    )


def mix_grid(outputs, rows):
    """mixed[g, a] = sum_t rows[g, t] * outputs[t, a] for a whole grid."""
    return np.einsum("gt,tars->gars", rows, outputs, optimize=True)


def grid_scan(mixed):
    mixed = np.ascontiguousarray(mixed, dtype=np.complex128)
    if BACKEND == "numba":
        return _grid_scan_loop(mixed)
    return _grid_scan_numpy(mixed)


# ---------------------------------------------------------------------------
# simplex grids (plain combinatorics, backend independent)
# ---------------------------------------------------------------------------


def count_simplex_grid(n_parts: int, resolution: int) -> int:
    return math.comb(resolution + n_parts - 1, n_parts - 1)


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for k in range(total + 1):
        for rest in _compositions(total - k, parts - 1):
            yield (k,) + rest


def simplex_grid(n_parts: int, resolution: int) -> np.ndarray:
    """All points of the resolution-`resolution` grid on the simplex.

    Rows enumerate compositions of `resolution` into `n_parts` parts in
    lexicographic order, scaled to sum to one.  Doubling the resolution
    refines the grid (every point survives).
    """
    if n_parts < 1:
        raise ValueError("n_parts must be positive")
    if n_parts == 1:
        return np.ones((1, 1))
    if resolution < 1:
        raise ValueError("resolution must be positive")
    rows = np.array(list(_compositions(resolution, n_parts)), dtype=np.float64)
    return rows / float(resolution)


def warmup():
    """Force-compile (or exercise) every kernel on a tiny instance."""
    outputs = np.zeros((2, 2, 2, 2), dtype=np.complex128)
    outputs[0, 0, 0, 0] = 1.0
    outputs[0, 1, 1, 1] = 1.0
    outputs[1, 0, 1, 1] = 1.0
    outputs[1, 1, 0, 0] = 1.0
    tau = np.full((2, 2), 0.5)
    residual_max(outputs, tau)
    surrogate_value_grad(outputs, tau)
    surrogate_descent(outputs, tau, 5, 1e-9)
    polish_descent(outputs, tau, 3)
    rows = simplex_grid(2, 2)
    grid_scan(mix_grid(outputs, rows))
    project_rows(tau)
    return BACKEND
