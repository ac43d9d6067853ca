"""Bidiagonal diagonalization, SVD assembly, sorting, and truncation.

The diagonalization is implicit-shift QR on the bidiagonal matrix: each
sweep picks the Wilkinson shift from the trailing 2x2 of B^T*B and chases
the bulge with Givens rotations, which accumulate into the left and right
orthogonal factors. Superdiagonal entries deflate once they drop below
eps * (|d_i| + |d_{i+1}|); negligible diagonal entries are rotated away so
rank-deficient inputs split cleanly. Negative diagonal survivors flip sign
into the left factor, so all returned singular values are non-negative.

Sorting is a literal bubble sort (descending, swapping only on strict
inequality so ties keep their original order), matching the pairwise
compare-and-store hardware flow and keeping the simulator's comparison
count faithful. Truncation keeps the smallest leading count k whose
discarded tail norm ||sigma[k+1:]|| falls below the threshold, so the
discarded tail always has norm strictly below delta and at least one
component survives; with delta == 0 nothing is ever discarded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadDims, NoConvergence, ShapeError
from .gemm import GemmExecutor
from .householder import bidiagonalize
from .machine import EventTrace, Phase
from .tensor import Matrix


@dataclass(frozen=True)
class SvdResult:
    u: Matrix
    sigma: np.ndarray
    v_t: Matrix

    @property
    def rank(self) -> int:
        return int(self.sigma.size)


@dataclass(frozen=True)
class SortPermutation:
    """ind[j] is the original index of the j-th largest singular value.

    comparisons and swaps record the bubble-sort work for the simulator.
    """

    ind: np.ndarray
    comparisons: int = 0
    swaps: int = 0


def _givens(f: float, g: float) -> tuple[float, float, float]:
    # c, s, r with [c s; -s c] @ [f, g]^T = [r, 0]^T
    if g == 0.0:
        return 1.0, 0.0, f
    if f == 0.0:
        return 0.0, 1.0, g
    r = math.hypot(f, g)
    return f / r, g / r, r


def _rot_cols(mat: np.ndarray, i: int, j: int, c: float, s: float, acc) -> None:
    ci = c * mat[:, i] + s * mat[:, j]
    cj = -s * mat[:, i] + c * mat[:, j]
    mat[:, i] = ci
    mat[:, j] = cj
    acc(6 * mat.shape[0])


def _rot_rows(mat: np.ndarray, i: int, j: int, c: float, s: float, acc) -> None:
    ri = c * mat[i, :] + s * mat[j, :]
    rj = -s * mat[i, :] + c * mat[j, :]
    mat[i, :] = ri
    mat[j, :] = rj
    acc(6 * mat.shape[1])


def _wilkinson_shift(b: np.ndarray, lo: int, hi: int) -> float:
    d1 = b[hi - 1, hi - 1]
    d2 = b[hi, hi]
    e1 = b[hi - 1, hi]
    e0 = b[hi - 2, hi - 1] if hi - 1 > lo else 0.0
    t11 = d1 * d1 + e0 * e0
    t12 = d1 * e1
    t22 = d2 * d2 + e1 * e1
    dd = (t11 - t22) / 2.0
    if t12 == 0.0:
        return t22
    denom = dd + math.copysign(math.hypot(dd, t12), dd if dd != 0.0 else 1.0)
    return t22 - (t12 * t12) / denom


def diagonalize_bidiagonal(
    b: Matrix,
    trace: EventTrace | None = None,
    max_sweeps: int | None = None,
):
    """Factor a bidiagonal b as q_l * diag(sigma) * q_r_t.

    Accepts upper bidiagonal input; a lower bidiagonal matrix (the shape
    bidiagonalize returns for wide inputs) is handled by transposing and
    swapping the factors. The optional trace attributes the rotation work
    to the QR phase. Raises NoConvergence, carrying the sweep count, once
    the sweep budget (default 30*N) is exhausted.
    """
    if b.rows != b.cols:
        raise ShapeError(f"bidiagonal matrix must be square, got {b.rows}x{b.cols}")
    work = b.a.astype(b.a.dtype, copy=True)
    n = b.rows
    has_lower = bool(np.any(np.tril(work, -1) != 0.0))
    has_upper2 = bool(np.any(np.triu(work, 2) != 0.0))
    has_super = bool(np.any(np.diagonal(work, 1) != 0.0))
    has_lower2 = bool(np.any(np.tril(work, -2) != 0.0))
    if has_upper2 or has_lower2 or (has_lower and has_super):
        raise ShapeError("matrix is not bidiagonal")
    if has_lower:
        q_l, sigma, q_r_t = diagonalize_bidiagonal(Matrix(work.T), trace, max_sweeps)
        return Matrix(q_r_t.a.T), sigma, Matrix(q_l.a.T)
    if trace is not None:
        with trace.phase(Phase.QR_DECOMP):
            return _diagonalize_upper(work, trace, max_sweeps)
    return _diagonalize_upper(work, None, max_sweeps)


def _diagonalize_upper(b: np.ndarray, trace, max_sweeps: int | None):
    n = b.shape[0]
    dt = b.dtype
    eps = 1e-14 if dt == np.float64 else 1e-6
    budget = 30 * n if max_sweeps is None else max_sweeps
    q_l = np.eye(n, dtype=dt)
    q_r_t = np.eye(n, dtype=dt)
    acc = trace.add_core_flops if trace is not None else (lambda k: None)
    sweeps = 0

    while True:
        for i in range(n - 1):
            if abs(b[i, i + 1]) <= eps * (abs(b[i, i]) + abs(b[i + 1, i + 1])):
                b[i, i + 1] = 0.0
        acc(3 * max(n - 1, 0))

        hi = n - 1
        while hi > 0 and b[hi - 1, hi] == 0.0:
            hi -= 1
        if hi == 0:
            break
        lo = hi
        while lo > 0 and b[lo - 1, lo] != 0.0:
            lo -= 1

        block_scale = max(
            float(np.max(np.abs(np.diagonal(b)[lo : hi + 1]))),
            float(np.max(np.abs(np.diagonal(b, 1)[lo:hi]))),
        )
        zero_tol = eps * block_scale

        # negligible diagonal inside the block: rotate its row away so the
        # zero singular value splits off
        zi = -1
        for i in range(lo, hi):
            if abs(b[i, i]) <= zero_tol:
                zi = i
                break
        if zi >= 0:
            b[zi, zi] = 0.0
            for k in range(zi + 1, hi + 1):
                c, s, _ = _givens(float(b[k, k]), float(b[zi, k]))
                _rot_rows(b, k, zi, c, s, acc)
                b[zi, k] = 0.0
                _rot_cols(q_l, k, zi, c, s, acc)
            continue
        if abs(b[hi, hi]) <= zero_tol:
            # negligible trailing diagonal: rotate its column away upward
            b[hi, hi] = 0.0
            for k in range(hi - 1, lo - 1, -1):
                c, s, _ = _givens(float(b[k, k]), float(b[k, hi]))
                _rot_cols(b, k, hi, c, s, acc)
                b[k, hi] = 0.0
                _rot_rows(q_r_t, k, hi, c, s, acc)
            continue

        sweeps += 1
        if sweeps > budget:
            raise NoConvergence(sweeps)

        mu = _wilkinson_shift(b, lo, hi)
        y = float(b[lo, lo]) ** 2 - mu
        z = float(b[lo, lo]) * float(b[lo, lo + 1])
        acc(16)
        for k in range(lo, hi):
            c, s, _ = _givens(y, z)
            _rot_cols(b, k, k + 1, c, s, acc)
            if k > lo:
                b[k - 1, k + 1] = 0.0
            _rot_rows(q_r_t, k, k + 1, c, s, acc)
            y = float(b[k, k])
            z = float(b[k + 1, k])
            c, s, _ = _givens(y, z)
            _rot_rows(b, k, k + 1, c, s, acc)
            b[k + 1, k] = 0.0
            _rot_cols(q_l, k, k + 1, c, s, acc)
            if k < hi - 1:
                y = float(b[k, k + 1])
                z = float(b[k, k + 2])

    sigma = np.diagonal(b).copy()
    for i in range(n):
        if sigma[i] < 0.0:
            sigma[i] = -sigma[i]
            q_l[:, i] = -q_l[:, i]
    return Matrix(q_l), sigma, Matrix(q_r_t)


def svd(a: Matrix, gemm: GemmExecutor, trace: EventTrace) -> SvdResult:
    """Full SVD: bidiagonalize, diagonalize, then compose the factors.

    The two composition products route through the GEMM executor and are
    attributed to the QR phase.
    """
    f = bidiagonalize(a, gemm, trace)
    q_l, sigma, q_r_t = diagonalize_bidiagonal(f.b, trace)
    with trace.phase(Phase.QR_DECOMP):
        u = gemm.run(f.u_b.a, q_l.a)
        v_t = gemm.run(q_r_t.a, f.v_b_t.a)
    return SvdResult(Matrix(u), sigma, Matrix(v_t))


def bubble_sort_descending(values) -> tuple[list, list, int, int]:
    """Classic full-pass bubble sort. Returns (sorted values, original
    indices, comparison count, swap count)."""
    vals = [float(v) for v in values]
    ind = list(range(len(vals)))
    comparisons = 0
    swaps = 0
    k = len(vals)
    for outer in range(k - 1):
        for j in range(k - 1 - outer):
            comparisons += 1
            if vals[j] < vals[j + 1]:
                vals[j], vals[j + 1] = vals[j + 1], vals[j]
                ind[j], ind[j + 1] = ind[j + 1], ind[j]
                swaps += 1
    return vals, ind, comparisons, swaps


def sorting_basis(res: SvdResult) -> tuple[SvdResult, SortPermutation]:
    """Sort singular values descending, permuting u columns and v_t rows by
    the same gather so the rank-1 terms are preserved."""
    _, order, comparisons, swaps = bubble_sort_descending(res.sigma)
    ind = np.asarray(order, dtype=np.int64)
    sorted_res = SvdResult(
        u=Matrix(res.u.a[:, ind]),
        sigma=res.sigma[ind].copy(),
        v_t=Matrix(res.v_t.a[ind, :]),
    )
    return sorted_res, SortPermutation(ind=ind, comparisons=comparisons, swaps=swaps)


def compute_delta(epsilon: float, n_dims: int, sigma_first) -> float:
    """Truncation threshold: (epsilon / sqrt(n_dims - 1)) * ||sigma_first||.

    The first SVD preserves the source tensor's Frobenius norm, so the norm
    of its singular values stands in for the tensor norm.
    """
    if n_dims < 2:
        raise BadDims(f"threshold needs n_dims >= 2, got {n_dims}")
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    sig = np.asarray(sigma_first, dtype=np.float64)
    return float(epsilon / math.sqrt(n_dims - 1) * np.sqrt(np.dot(sig, sig)))


def delta_truncation(res: SvdResult, delta: float) -> SvdResult:
    """Keep components 1..k where k is the smallest count whose discarded
    tail norm ||sigma[k+1:]|| drops below delta; without such a count
    nothing is truncated (delta == 0 in particular keeps everything).
    k never drops below 1."""
    sig = res.sigma
    rank = sig.size
    if rank > 1 and np.any(np.diff(sig) > 0):
        raise ValueError("delta_truncation expects non-increasing sigma")
    # tails[i] = ||sigma[i:]||, with tails[rank] = 0
    tails = np.zeros(rank + 1)
    tails[:rank] = np.sqrt(np.cumsum(np.square(sig[::-1], dtype=np.float64))[::-1])
    keep = rank
    for r in range(1, rank + 1):
        if tails[r] < delta:
            keep = r
            break
    return SvdResult(
        u=Matrix(res.u.a[:, :keep]),
        sigma=sig[:keep].copy(),
        v_t=Matrix(res.v_t.a[:keep, :]),
    )
