"""Blockwise GEMM execution with block, DMA, and configuration accounting.

The accelerator multiplies fixed-size blocks, so a product of an M x K by a
K x N matrix issues ceil(M/bs)*ceil(N/bs)*ceil(K/bs) block operations.
Operand blocks stream through the scratchpad: each A block is reloaded once
per output column tile and each B block once per output row tile, while the
C tile accumulates in place and is written out once. Configuration
messaging depends on who drives the accelerator: the baseline core sends
one message per block triple, the engine one per whole product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch
from .machine import EventTrace, MachineConfig, Phase
from .tensor import Matrix, accumulate_product, matmul


def hbd_addr(a_addr: int, a_width: int, i: int, order: int) -> int:
    """Scratchpad address of the reflector vector for step i.

    Mirrors the engine's address calculator: the left vector of step i
    starts on the diagonal, the right vector one element further.
    """
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    if i < 0:
        raise ValueError("i must be >= 0")
    return a_addr + i * (a_width + 1) + order


@dataclass
class GemmExecutor:
    """Routes matrix products either through the reference path or the
    instrumented blockwise path.

    mode "reference" computes matmul_ref with zero accounting. Mode
    "simulated" performs real blockwise execution, records events into the
    trace, and must produce results equal to the reference (the blocked
    loop accumulates in the same element order, so they are bit-identical).

    direct_config_phases lists the phases in which the engine drives the
    accelerator directly (one config message per product). None resolves
    to every phase for a tt_edge machine and to no phase otherwise.
    """

    machine: MachineConfig | None = None
    trace: EventTrace | None = None
    mode: str = "reference"
    direct_config_phases: frozenset | None = None

    def __post_init__(self):
        if self.mode not in ("reference", "simulated"):
            raise ValueError(f"unknown executor mode {self.mode!r}")
        if self.mode == "simulated" and (self.machine is None or self.trace is None):
            raise ValueError("simulated mode needs a machine and a trace")
        if self.direct_config_phases is None:
            if self.machine is not None and self.machine.variant == "tt_edge":
                self.direct_config_phases = frozenset(Phase)
            else:
                self.direct_config_phases = frozenset()

    @classmethod
    def reference(cls) -> "GemmExecutor":
        return cls()

    @property
    def simulated(self) -> bool:
        return self.mode == "simulated"

    @property
    def engine(self) -> bool:
        """True when the offload engine is present (tt_edge variant)."""
        return self.machine is not None and self.machine.variant == "tt_edge"

    def run(
        self,
        a: np.ndarray,
        b: np.ndarray,
        a_traffic: bool = True,
        b_traffic: bool = True,
        c_traffic: bool = True,
    ) -> np.ndarray:
        """Multiply raw 2-D arrays through the selected path.

        The traffic flags let callers take over DMA accounting for operands
        they stage themselves (retained reflector vectors, intermediates
        that never leave the scratchpad).
        """
        a = np.asarray(a)
        b = np.asarray(b)
        if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
            raise DimMismatch(f"cannot multiply {a.shape} by {b.shape}")
        if not self.simulated:
            return matmul(a, b)
        self.account_gemm(a.shape[0], a.shape[1], b.shape[1], a_traffic, b_traffic, c_traffic)
        return self._blocked(a, b)

    def account_gemm(
        self,
        m: int,
        k: int,
        n: int,
        a_traffic: bool = True,
        b_traffic: bool = True,
        c_traffic: bool = True,
    ) -> None:
        """Record the events of an M x K times K x N product without
        computing it (used when the numeric path takes a shortcut that the
        hardware would not)."""
        if not self.simulated:
            return
        bs = self.machine.gemm_block
        mb = math.ceil(m / bs)
        nb = math.ceil(n / bs)
        kb = math.ceil(k / bs)
        # one A block, one B block, one C accumulator block live at a time
        working = 3 * bs * bs
        self.trace.spm_acquire(working)
        self.trace.spm_release(working)
        blocks = mb * nb * kb
        self.trace.add_gemm_blocks(blocks)
        if a_traffic:
            self.trace.add_dma_in(m * k * nb)
        if b_traffic:
            self.trace.add_dma_in(k * n * mb)
        if c_traffic:
            self.trace.add_dma_out(m * n)
        direct = self.engine and self.trace.current_phase in self.direct_config_phases
        self.trace.add_config(1 if direct else blocks)

    def _blocked(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        bs = self.machine.gemm_block
        m, k = a.shape
        n = b.shape[1]
        out = np.zeros((m, n), dtype=np.result_type(a, b))
        for i0 in range(0, m, bs):
            i1 = min(i0 + bs, m)
            for j0 in range(0, n, bs):
                j1 = min(j0 + bs, n)
                tile = out[i0:i1, j0:j1]
                for k0 in range(0, k, bs):
                    k1 = min(k0 + bs, k)
                    accumulate_product(tile, a[i0:i1, k0:k1], b[k0:k1, j0:j1])
        return out


def blocked_gemm(a: Matrix, b: Matrix, exec: GemmExecutor) -> Matrix:
    """Public product entry point; numerically equal to matmul_ref."""
    if a.cols != b.rows:
        raise DimMismatch(f"cannot multiply {a.rows}x{a.cols} by {b.rows}x{b.cols}")
    return Matrix(exec.run(a.a, b.a))
