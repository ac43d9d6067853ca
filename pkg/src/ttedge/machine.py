"""Machine models, per-phase event accounting, and time/energy reports.

Two machine variants are modeled. The baseline couples a host core to a
blockwise GEMM accelerator; the core performs every non-GEMM step itself
and pays a configuration message per block. The tt_edge variant offloads
reflector generation, sorting, and truncation to an engine that shares the
accelerator scratchpad, messages the accelerator once per product, and can
gate the host core clock during the offloaded phases.

DMA traffic is counted in 32-bit words (the modeled datapath width), no
matter which dtype the library computes in.
"""

from __future__ import annotations

import json
from contextlib import contextmanager
from dataclasses import dataclass, field, fields
from enum import Enum
from pathlib import Path

from .errors import ConfigError, PhaseSetMismatch, SpmOverflow

WORD_BYTES = 4


class Phase(Enum):
    HBD = "HBD"
    QR_DECOMP = "QRDecomp"
    SORT_TRUNC = "SortTrunc"
    UPDATE_SVD_INPUT = "UpdateSVDInput"
    RESHAPE_ETC = "ReshapeEtc"


PHASE_ORDER = (
    Phase.HBD,
    Phase.QR_DECOMP,
    Phase.SORT_TRUNC,
    Phase.UPDATE_SVD_INPUT,
    Phase.RESHAPE_ETC,
)

# Phases handled by the offload engine on the tt_edge variant.
ENGINE_PHASES = frozenset({Phase.HBD, Phase.SORT_TRUNC})

VARIANTS = ("baseline", "tt_edge")


def phase_from_name(name: str) -> Phase:
    for p in Phase:
        if p.value == name:
            return p
    raise ConfigError(f"unknown phase name {name!r}")


@dataclass(frozen=True)
class PowerStates:
    """Whole-processor power draw per state, in milliwatts."""

    baseline_total: float = 171.04
    ttedge_active: float = 178.23
    ttedge_gated: float = 169.96


@dataclass(frozen=True)
class CostTable:
    """Per-event latency parameters in nanoseconds.

    Defaults are plausibility figures for a 100 MHz part (a 16x16 block on
    64 MACs, a few-cycle host FLOP, a pipelined engine ALU op, an APB-style
    configuration exchange, a DDR word transfer). Only the counter
    arithmetic and the energy identity are contractual; the per-op values
    are calibration knobs.
    """

    dma_word: float = 10.0
    gemm_block_op: float = 640.0
    core_flop: float = 20.0
    config_msg: float = 200.0
    fpalu_op: float = 10.0


@dataclass(frozen=True)
class MachineConfig:
    variant: str = "baseline"
    gemm_block: int = 16
    spm_bytes: int = 320 * 1024
    power_mw: PowerStates = field(default_factory=PowerStates)
    cost_ns: CostTable = field(default_factory=CostTable)
    gating_phases: frozenset = frozenset()

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.gemm_block < 1:
            raise ConfigError("gemm_block must be >= 1")
        if self.spm_bytes < 1:
            raise ConfigError("spm_bytes must be >= 1")
        for f in fields(self.cost_ns):
            if getattr(self.cost_ns, f.name) < 0:
                raise ConfigError(f"cost_ns.{f.name} must be >= 0")
        gating = frozenset(self.gating_phases)
        if self.variant == "baseline" and gating:
            # the baseline core is never gated; it stays continuously active
            raise ConfigError("baseline variant must have empty gating_phases")
        object.__setattr__(self, "gating_phases", gating)

    @classmethod
    def baseline(cls) -> "MachineConfig":
        return cls(variant="baseline")

    @classmethod
    def tt_edge(cls) -> "MachineConfig":
        return cls(variant="tt_edge", gating_phases=ENGINE_PHASES)

    @classmethod
    def from_dict(cls, doc: dict) -> "MachineConfig":
        if not isinstance(doc, dict):
            raise ConfigError("machine config must be a JSON object")
        allowed = {"variant", "gemm_block", "spm_bytes", "power_mw", "cost_ns", "gating_phases"}
        unknown = set(doc) - allowed
        if unknown:
            raise ConfigError(f"unknown machine config keys: {sorted(unknown)}")
        kwargs = {}
        if "variant" in doc:
            kwargs["variant"] = doc["variant"]
        if "gemm_block" in doc:
            kwargs["gemm_block"] = _as_int(doc["gemm_block"], "gemm_block")
        if "spm_bytes" in doc:
            kwargs["spm_bytes"] = _as_int(doc["spm_bytes"], "spm_bytes")
        if "power_mw" in doc:
            kwargs["power_mw"] = _nested(PowerStates, doc["power_mw"], "power_mw")
        if "cost_ns" in doc:
            kwargs["cost_ns"] = _nested(CostTable, doc["cost_ns"], "cost_ns")
        if "gating_phases" in doc:
            names = doc["gating_phases"]
            if not isinstance(names, list):
                raise ConfigError("gating_phases must be a list of phase names")
            kwargs["gating_phases"] = frozenset(phase_from_name(n) for n in names)
        elif doc.get("variant") == "tt_edge":
            kwargs["gating_phases"] = ENGINE_PHASES
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "MachineConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read machine config {path}: {exc}") from exc
        return cls.from_dict(doc)


def _as_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer")
    return value


def _nested(target, doc, name: str):
    if not isinstance(doc, dict):
        raise ConfigError(f"{name} must be a JSON object")
    allowed = {f.name for f in fields(target)}
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown {name} keys: {sorted(unknown)}")
    for key, value in doc.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name}.{key} must be a number")
    return target(**doc)


@dataclass
class PhaseCounters:
    gemm_block_calls: int = 0
    dma_words_in: int = 0
    dma_words_out: int = 0
    config_msgs: int = 0
    core_flops: int = 0
    fpalu_ops: int = 0
    # portion of dma_words_in spent re-reading reflector vectors from DRAM
    householder_refetch_words: int = 0


class EventTrace:
    """Per-phase event counters plus scratchpad residency tracking.

    offload_scalars routes the scalar work of reflector generation,
    sorting, and truncation to fpalu_ops (the engine's shared ALU) instead
    of core_flops (the host core). Work that always runs on the host, such
    as the rotation sweeps of the diagonalization, is recorded with
    add_core_flops regardless.
    """

    def __init__(self, spm_limit_bytes: int | None = None, offload_scalars: bool = False):
        self.counters = {p: PhaseCounters() for p in Phase}
        self.offload_scalars = offload_scalars
        self.spm_limit_bytes = spm_limit_bytes
        self.current_phase = Phase.RESHAPE_ETC
        self._spm_words = 0
        self._spm_peak_words = 0

    @contextmanager
    def phase(self, phase: Phase):
        prev = self.current_phase
        self.current_phase = phase
        try:
            yield self
        finally:
            self.current_phase = prev

    def _at(self) -> PhaseCounters:
        return self.counters[self.current_phase]

    def add_gemm_blocks(self, n: int) -> None:
        self._at().gemm_block_calls += n

    def add_dma_in(self, words: int, refetch: bool = False) -> None:
        c = self._at()
        c.dma_words_in += words
        if refetch:
            c.householder_refetch_words += words

    def add_dma_out(self, words: int) -> None:
        self._at().dma_words_out += words

    def add_config(self, n: int = 1) -> None:
        self._at().config_msgs += n

    def add_core_flops(self, n: int) -> None:
        self._at().core_flops += n

    def add_offloadable_flops(self, n: int) -> None:
        if self.offload_scalars:
            self._at().fpalu_ops += n
        else:
            self._at().core_flops += n

    def spm_acquire(self, words: int) -> None:
        new = self._spm_words + words
        if self.spm_limit_bytes is not None and new * WORD_BYTES > self.spm_limit_bytes:
            raise SpmOverflow(
                f"scratchpad needs {new * WORD_BYTES} bytes, capacity is {self.spm_limit_bytes}"
            )
        self._spm_words = new
        self._spm_peak_words = max(self._spm_peak_words, new)

    def spm_release(self, words: int) -> None:
        if words > self._spm_words:
            raise ValueError("releasing more scratchpad words than acquired")
        self._spm_words -= words

    @property
    def spm_resident_words(self) -> int:
        """Running high-water mark of scratchpad residency, in words."""
        return self._spm_peak_words

    def total(self, attr: str) -> int:
        return sum(getattr(self.counters[p], attr) for p in Phase)


@dataclass(frozen=True)
class PhaseReport:
    phase: Phase
    time_ms: float
    energy_mj: float
    core_gated: bool


@dataclass(frozen=True)
class ComparisonSummary:
    baseline_time_ms: float
    baseline_energy_mj: float
    ttedge_time_ms: float
    ttedge_energy_mj: float
    speedup: float
    energy_reduction_pct: float


def power_for(machine: MachineConfig, phase: Phase) -> float:
    """Applicable power state in mW for one phase on one machine."""
    if machine.variant == "baseline":
        return machine.power_mw.baseline_total
    if phase in machine.gating_phases:
        return machine.power_mw.ttedge_gated
    return machine.power_mw.ttedge_active


def phase_times_ms(trace: EventTrace, machine: MachineConfig) -> dict[Phase, float]:
    """Weighted sum of event counters by the machine's latency table."""
    c = machine.cost_ns
    out = {}
    for p in PHASE_ORDER:
        k = trace.counters[p]
        ns = (
            k.gemm_block_calls * c.gemm_block_op
            + (k.dma_words_in + k.dma_words_out) * c.dma_word
            + k.config_msgs * c.config_msg
            + k.core_flops * c.core_flop
            + k.fpalu_ops * c.fpalu_op
        )
        out[p] = ns * 1e-6
    return out


def energy_report(phase_times_ms: dict, machine: MachineConfig) -> list[PhaseReport]:
    """E = P x T accounting: energy_mj is exactly time_ms * power_mw / 1000."""
    reports = []
    for phase in PHASE_ORDER:
        if phase not in phase_times_ms:
            continue
        t = float(phase_times_ms[phase])
        if t < 0:
            raise ValueError(f"negative phase time for {phase.value}")
        p = power_for(machine, phase)
        reports.append(
            PhaseReport(
                phase=phase,
                time_ms=t,
                energy_mj=t * p / 1000.0,
                core_gated=phase in machine.gating_phases,
            )
        )
    return reports


def summary(baseline_reports: list, ttedge_reports: list) -> ComparisonSummary:
    """Totals per variant plus the headline speedup and energy-reduction."""
    base_phases = {r.phase for r in baseline_reports}
    edge_phases = {r.phase for r in ttedge_reports}
    if base_phases != edge_phases:
        raise PhaseSetMismatch(
            f"phase sets differ: {sorted(p.value for p in base_phases)} vs "
            f"{sorted(p.value for p in edge_phases)}"
        )
    bt = sum(r.time_ms for r in baseline_reports)
    be = sum(r.energy_mj for r in baseline_reports)
    tt = sum(r.time_ms for r in ttedge_reports)
    te = sum(r.energy_mj for r in ttedge_reports)
    speedup = bt / tt if tt > 0 else 1.0
    reduction = (1.0 - te / be) * 100.0 if be > 0 else 0.0
    return ComparisonSummary(
        baseline_time_ms=bt,
        baseline_energy_mj=be,
        ttedge_time_ms=tt,
        ttedge_energy_mj=te,
        speedup=speedup,
        energy_reduction_pct=reduction,
    )


def report_rows(variant: str, reports: list) -> list[dict]:
    """Flat serialization rows: variant, phase, time_ms, energy_mj, core_gated."""
    return [
        {
            "variant": variant,
            "phase": r.phase.value,
            "time_ms": r.time_ms,
            "energy_mj": r.energy_mj,
            "core_gated": r.core_gated,
        }
        for r in reports
    ]
