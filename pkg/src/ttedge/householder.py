"""Householder reflector generation and two-phase bidiagonalization.

The reduction phase eliminates one column and one row per step, writing the
modified first element of each reflector vector into the eliminated
position of the working matrix so the full vectors survive in place. The
accumulation phase replays those vectors in reverse order onto identity
matrices to build the orthogonal factors.

Sign convention: the vector update uses v[1] <- v[1] + sign(v[1])*||v||
with sign(0) = +1, which avoids cancellation. The surviving entry is
q = -sign(v[1])*||v||, and beta = v[1]*q equals -(v.v)/2, so dividing v by
beta reproduces the -2/(v.v) coefficient of the explicit reflector
H = I - 2*v*v^T/(v^T*v). Both products of every reflector application go
through the GEMM executor.

Zero-norm inputs are not an error: house returns q = 0 and callers skip
the update, since the column is already eliminated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBeta, DimMismatch, ShapeError
from .gemm import GemmExecutor
from .machine import EventTrace, Phase
from .tensor import Matrix

_FLOAT_DTYPES = (np.dtype(np.float64), np.dtype(np.float32))


def _sign(x: float) -> float:
    return -1.0 if x < 0 else 1.0


@dataclass(frozen=True)
class HouseholderStep:
    """q is the signed norm that survives on the band; v keeps the input
    vector with its first element already modified."""

    q: float
    v: np.ndarray


def house(x) -> HouseholderStep:
    v = np.array(x)
    if v.dtype not in _FLOAT_DTYPES:
        v = v.astype(np.float64)
    if v.ndim != 1 or v.size < 1:
        raise ShapeError("house needs a non-empty 1-D vector")
    norm = float(np.sqrt(np.dot(v, v)))
    if norm == 0.0:
        return HouseholderStep(0.0, v)
    s = _sign(float(v[0]))
    v[0] += s * norm
    return HouseholderStep(-s * norm, v)


def house_mm_update(q: float, v, sub: Matrix, order: int, gemm: GemmExecutor) -> Matrix:
    """Apply the reflector defined by (q, v) to a submatrix.

    order 0 applies H from the left (length(v) == sub.rows), order 1 from
    the right (length(v) == sub.cols). Returns sub + vec1*vec2 where the
    two products run through the executor; the v/beta scaling is scalar
    work on whichever unit owns it.
    """
    v = np.asarray(v)
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    if order == 0 and v.size != sub.rows:
        raise DimMismatch(f"left update needs len(v) == rows ({v.size} != {sub.rows})")
    if order == 1 and v.size != sub.cols:
        raise DimMismatch(f"right update needs len(v) == cols ({v.size} != {sub.cols})")
    if q == 0.0:
        raise DegenerateBeta("q == 0: column already zero, skip the update")
    beta = float(v[0]) * q

    sim = gemm.simulated
    tr = gemm.trace
    n = v.size
    if sim:
        # beta plus one divide per element
        tr.add_offloadable_flops(n + 1)
        if gemm.engine:
            # scaled vector parked in the scratchpad next to the retained one
            tr.spm_acquire(n)
        else:
            # the core re-reads the vector for the scaling pass and for each
            # product, and stages the scaled copy back out
            tr.add_dma_in(3 * n, refetch=True)
            tr.add_dma_out(n)
    keep_inside = sim and gemm.engine
    v_scaled = v / beta
    if order == 0:
        mid = gemm.run(v.reshape(1, -1), sub.a, a_traffic=False, c_traffic=not keep_inside)
        upd = gemm.run(
            v_scaled.reshape(-1, 1), mid, a_traffic=False, b_traffic=not keep_inside
        )
    else:
        mid = gemm.run(sub.a, v.reshape(-1, 1), b_traffic=False, c_traffic=not keep_inside)
        upd = gemm.run(
            mid, v_scaled.reshape(1, -1), a_traffic=not keep_inside, b_traffic=False
        )
    if keep_inside:
        tr.spm_release(n)
    return Matrix(sub.a + upd)


@dataclass(frozen=True)
class BidiagFactorization:
    """A = u_b * b * v_b_t with b banded by construction."""

    u_b: Matrix
    b: Matrix
    v_b_t: Matrix


def bidiagonalize(a: Matrix, gemm: GemmExecutor, trace: EventTrace) -> BidiagFactorization:
    """Reduce a to bidiagonal form and accumulate the orthogonal factors.

    For rows >= cols the returned b is upper bidiagonal. Wider inputs are
    factorized transposed and the factors swapped back, which leaves b
    lower bidiagonal; the diagonalization stage accepts both orientations.
    """
    if a.cols == 0 or a.rows == 0:
        raise ShapeError("cannot bidiagonalize an empty matrix")
    if a.rows < a.cols:
        f = bidiagonalize(Matrix(a.a.T), gemm, trace)
        return BidiagFactorization(
            u_b=Matrix(f.v_b_t.a.T),
            b=Matrix(f.b.a.T),
            v_b_t=Matrix(f.u_b.a.T),
        )
    with trace.phase(Phase.HBD):
        return _bidiagonalize_tall(a, gemm, trace)


def _bidiagonalize_tall(a: Matrix, gemm: GemmExecutor, trace: EventTrace) -> BidiagFactorization:
    m, n = a.rows, a.cols
    work = a.a.copy()
    dt = work.dtype
    b = np.zeros((n, n), dtype=dt)
    sim = gemm.simulated
    retained = 0

    def fetch_vector(length: int) -> None:
        nonlocal retained
        if not sim:
            return
        trace.add_dma_in(length)
        trace.add_offloadable_flops(length + 3)  # norm MACs, sqrt, q, v[1]
        if gemm.engine:
            trace.spm_acquire(length)
            retained += length

    # Reduction: eliminate column i below the diagonal, then row i right of
    # the superdiagonal. The reflector vectors stay in the eliminated parts
    # of work, with the modified first element stored on the band position.
    for i in range(n):
        step = house(work[i:, i])
        q = float(dt.type(step.q))
        b[i, i] = q
        fetch_vector(step.v.size)
        if q != 0.0 and i + 1 < n:
            sub = house_mm_update(q, step.v, Matrix(work[i:, i + 1 :]), 0, gemm)
            work[i:, i + 1 :] = sub.a
        work[i, i] = step.v[0]
        if sim:
            trace.add_dma_out(1)
        if i + 1 < n:
            step = house(work[i, i + 1 :])
            q = float(dt.type(step.q))
            b[i, i + 1] = q
            fetch_vector(step.v.size)
            if q != 0.0:
                sub = house_mm_update(q, step.v, Matrix(work[i + 1 :, i + 1 :]), 1, gemm)
                work[i + 1 :, i + 1 :] = sub.a
            work[i, i + 1] = step.v[0]
            if sim:
                trace.add_dma_out(1)

    # Accumulation: replay the stored reflectors in reverse order onto
    # identity-initialized factors. The left update must start at column i
    # (column i of u_b is still the basis vector e_i at that point and the
    # reflector has to touch it); the right update starts past the
    # superdiagonal as the remaining rows and columns are still identity.
    u_b = np.eye(m, n, dtype=dt)
    v_b_t = np.eye(n, dtype=dt)
    for i in range(n - 1, -1, -1):
        if i + 1 < n and b[i, i + 1] != 0.0:
            v_r = work[i, i + 1 :]
            sub = house_mm_update(float(b[i, i + 1]), v_r, Matrix(v_b_t[i + 1 :, i + 1 :]), 1, gemm)
            v_b_t[i + 1 :, i + 1 :] = sub.a
        if b[i, i] != 0.0:
            v_l = work[i:, i]
            sub = house_mm_update(float(b[i, i]), v_l, Matrix(u_b[i:, i:]), 0, gemm)
            u_b[i:, i:] = sub.a

    if sim and gemm.engine and retained:
        trace.spm_release(retained)
    return BidiagFactorization(Matrix(u_b), Matrix(b), Matrix(v_b_t))
