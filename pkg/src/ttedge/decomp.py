"""Top-level train decomposition, the contraction decoder, and reporting.

The decomposition loop alternates reshape, SVD, sorting, truncation, and
the product that forms the next working matrix. The truncation threshold
is computed once, from the singular values of the first SVD (whose norm
equals the source tensor norm), and reused for every later step; with N-1
truncated steps each discarding a tail of norm below
epsilon/sqrt(N-1)*||W||, the decoded tensor lands within epsilon of the
source in relative Frobenius error.

Every matrix product is routed through (or at least accounted by) the
supplied GEMM executor so the simulator sees the same work the hardware
would. The Sigma*V^T product is evaluated as a diagonal row scaling, which
is the same matrix, but it is charged to the trace as the k x k by
k x cols product the hardware runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod

import numpy as np

from .errors import EmptyTensor, RankChainBroken, ShapeMismatch
from .gemm import GemmExecutor
from .machine import EventTrace, Phase
from .svd import compute_delta, delta_truncation, sorting_basis, svd
from .tensor import Matrix, Tensor, frobenius_norm, reshape, tensor_contract


@dataclass(frozen=True)
class TTCores:
    """Ordered chain of 3-D cores; core k has dims [r_{k-1}, n_k, r_k]."""

    cores: tuple
    ranks: tuple

    @classmethod
    def from_cores(cls, cores) -> "TTCores":
        cores = tuple(cores)
        ranks = tuple(int(c.dims[0]) for c in cores) + (int(cores[-1].dims[2]),)
        return cls(cores=cores, ranks=ranks)

    def validate(self) -> None:
        if not self.cores:
            raise RankChainBroken("no cores")
        for c in self.cores:
            if len(c.dims) != 3:
                raise RankChainBroken(f"core has dims {c.dims}, expected 3")
        if self.ranks[0] != 1 or self.ranks[-1] != 1:
            raise RankChainBroken(f"boundary ranks must be 1, got {self.ranks}")
        if len(self.ranks) != len(self.cores) + 1:
            raise RankChainBroken("rank vector length must be N+1")
        for k, c in enumerate(self.cores):
            if c.dims[0] != self.ranks[k] or c.dims[2] != self.ranks[k + 1]:
                raise RankChainBroken(
                    f"core {k} dims {c.dims} break the chain {self.ranks}"
                )

    @property
    def mode_dims(self) -> tuple:
        return tuple(c.dims[1] for c in self.cores)

    @property
    def total_params(self) -> int:
        return sum(c.numel for c in self.cores)


def tt_decompose(w: Tensor, epsilon: float, gemm: GemmExecutor, trace: EventTrace) -> TTCores:
    """Decompose w into a core chain meeting the prescribed accuracy."""
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    dims = w.dims
    n_dims = len(dims)
    if w.numel == 0:
        raise EmptyTensor("tensor has no elements")
    if n_dims == 1:
        return TTCores.from_cores([reshape(w, (1, dims[0], 1))])

    sim = gemm.simulated

    def charge_reshape(words: int) -> None:
        # layout shuffles stream through memory once in and once out
        if sim:
            trace.add_dma_in(words)
            trace.add_dma_out(words)

    with trace.phase(Phase.RESHAPE_ETC):
        work = w.data.reshape(-1)
        charge_reshape(w.numel)

    delta = None
    r_prev = 1
    cores = []
    for k in range(n_dims - 1):
        rows = r_prev * dims[k]
        cols = work.size // rows
        with trace.phase(Phase.RESHAPE_ETC):
            mat = Matrix(work.reshape(rows, cols))
            charge_reshape(work.size)

        res = svd(mat, gemm, trace)

        with trace.phase(Phase.SORT_TRUNC):
            if delta is None:
                delta = compute_delta(epsilon, n_dims, res.sigma)
                if sim:
                    # norm MACs plus SQRT, MUL, DIV and the sqrt(d-1) term
                    trace.add_offloadable_flops(res.rank + 5)
            res_s, perm = sorting_basis(res)
            if sim:
                trace.add_offloadable_flops(perm.comparisons + 2 * perm.swaps)
                if not gemm.engine:
                    # the host core pulls sigma plus both bases through DRAM
                    # to reorder them; the engine permutes inside the SPM
                    moved = res.rank * (mat.rows + mat.cols + 1)
                    trace.add_dma_in(moved)
                    trace.add_dma_out(moved)
            res_t = delta_truncation(res_s, delta)
            if sim:
                scanned = res.rank - res_t.rank + 1
                trace.add_offloadable_flops(2 * scanned + 1)

        r_k = res_t.rank
        with trace.phase(Phase.UPDATE_SVD_INPUT):
            next_work = res_t.sigma[:, None].astype(res_t.v_t.a.dtype) * res_t.v_t.a
            gemm.account_gemm(r_k, r_k, cols)

        with trace.phase(Phase.RESHAPE_ETC):
            cores.append(Tensor(res_t.u.a.reshape(r_prev, dims[k], r_k)))
            charge_reshape(res_t.u.a.size)

        work = next_work.reshape(-1)
        r_prev = r_k

    with trace.phase(Phase.RESHAPE_ETC):
        cores.append(Tensor(work.reshape(r_prev, dims[-1], 1)))
        charge_reshape(work.size)
    return TTCores.from_cores(cores)


def tt_decode(cores: TTCores) -> Tensor:
    """Left fold of the contraction across the chain, squeezing the unit
    boundary extents at the end."""
    cores.validate()
    acc = cores.cores[0]
    for core in cores.cores[1:]:
        acc = tensor_contract(acc, core)
    return reshape(acc, cores.mode_dims)


def compression_ratio(original_dims, cores: TTCores) -> float:
    """Source element count over total core parameters; may dip below 1."""
    return prod(int(n) for n in original_dims) / cores.total_params


def reconstruction_error(w: Tensor, cores: TTCores) -> float:
    """Relative Frobenius error of the decoded tensor against w."""
    decoded = tt_decode(cores)
    if decoded.dims != w.dims:
        raise ShapeMismatch(f"decoded dims {decoded.dims} != source dims {w.dims}")
    diff = w.data - decoded.data
    err = float(np.sqrt(np.sum(np.square(diff, dtype=np.float64))))
    scale = frobenius_norm(w)
    if scale == 0.0:
        return 0.0 if err == 0.0 else float("inf")
    return err / scale
