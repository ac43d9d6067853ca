"""Tensor-train compression with an instrumented edge-accelerator cost model."""

from .decomp import (
    TTCores,
    compression_ratio,
    reconstruction_error,
    tt_decode,
    tt_decompose,
)
from .errors import (
    BadDims,
    ConfigError,
    ContractDimMismatch,
    DegenerateBeta,
    DimMismatch,
    ElementCountMismatch,
    EmptyTensor,
    FormatError,
    NoConvergence,
    PhaseSetMismatch,
    RankChainBroken,
    ShapeError,
    ShapeMismatch,
    SpmOverflow,
    TTEdgeError,
)
from .gemm import GemmExecutor, blocked_gemm, hbd_addr
from .householder import BidiagFactorization, HouseholderStep, bidiagonalize, house, house_mm_update
from .machine import (
    ENGINE_PHASES,
    ComparisonSummary,
    CostTable,
    EventTrace,
    MachineConfig,
    Phase,
    PhaseCounters,
    PhaseReport,
    PowerStates,
    energy_report,
    phase_times_ms,
    report_rows,
    summary,
)
from .svd import (
    SortPermutation,
    SvdResult,
    compute_delta,
    delta_truncation,
    diagonalize_bidiagonal,
    sorting_basis,
    svd,
)
from .sim import REPORTED_PHASE_TIMES_MS, reported_reports, simulate_ttd
from .tensor import Matrix, Tensor, frobenius_norm, matmul_ref, reshape, tensor_contract

__version__ = "0.1.0"
