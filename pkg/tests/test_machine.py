import json

import numpy as np
import pytest

from ttedge import (
    ConfigError,
    CostTable,
    EventTrace,
    MachineConfig,
    Phase,
    PhaseSetMismatch,
    PowerStates,
    SpmOverflow,
    energy_report,
    summary,
)
from ttedge.machine import ENGINE_PHASES, WORD_BYTES, report_rows


def test_builtin_defaults():
    base = MachineConfig.baseline()
    assert base.gemm_block == 16
    assert base.spm_bytes == 320 * 1024
    assert base.power_mw == PowerStates(171.04, 178.23, 169.96)
    assert base.gating_phases == frozenset()
    edge = MachineConfig.tt_edge()
    assert edge.gating_phases == ENGINE_PHASES


def test_baseline_cannot_gate():
    with pytest.raises(ConfigError):
        MachineConfig(variant="baseline", gating_phases=frozenset({Phase.HBD}))


def test_config_validation():
    with pytest.raises(ConfigError):
        MachineConfig(variant="weird")
    with pytest.raises(ConfigError):
        MachineConfig(gemm_block=0)
    with pytest.raises(ConfigError):
        MachineConfig(cost_ns=CostTable(dma_word=-1.0))


def test_config_json_roundtrip(tmp_path):
    doc = {
        "variant": "tt_edge",
        "gemm_block": 8,
        "spm_bytes": 65536,
        "power_mw": {"baseline_total": 100.0, "ttedge_active": 110.0, "ttedge_gated": 95.0},
        "cost_ns": {
            "dma_word": 1.0,
            "gemm_block_op": 2.0,
            "core_flop": 3.0,
            "config_msg": 4.0,
            "fpalu_op": 5.0,
        },
        "gating_phases": ["HBD", "SortTrunc"],
    }
    path = tmp_path / "machine.json"
    path.write_text(json.dumps(doc))
    cfg = MachineConfig.load(path)
    assert cfg.variant == "tt_edge"
    assert cfg.gemm_block == 8
    assert cfg.cost_ns.fpalu_op == 5.0
    assert cfg.gating_phases == frozenset({Phase.HBD, Phase.SORT_TRUNC})


def test_config_rejects_unknown_keys(tmp_path):
    for doc in (
        {"variant": "baseline", "watts": 2},
        {"power_mw": {"baseline_total": 1.0, "idle": 0.5}},
        {"cost_ns": {"dma_word": 1.0, "sram_word": 1.0}},
    ):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ConfigError):
            MachineConfig.load(path)


def test_config_rejects_bad_phase_name():
    with pytest.raises(ConfigError):
        MachineConfig.from_dict({"variant": "tt_edge", "gating_phases": ["Warmup"]})


def test_trace_phase_scoping():
    trace = EventTrace()
    with trace.phase(Phase.HBD):
        trace.add_core_flops(3)
        with trace.phase(Phase.QR_DECOMP):
            trace.add_core_flops(5)
        trace.add_core_flops(2)
    assert trace.counters[Phase.HBD].core_flops == 5
    assert trace.counters[Phase.QR_DECOMP].core_flops == 5
    assert trace.total("core_flops") == 10


def test_trace_offload_routing():
    host = EventTrace(offload_scalars=False)
    host.add_offloadable_flops(7)
    assert host.total("core_flops") == 7
    assert host.total("fpalu_ops") == 0
    engine = EventTrace(offload_scalars=True)
    engine.add_offloadable_flops(7)
    assert engine.total("core_flops") == 0
    assert engine.total("fpalu_ops") == 7


def test_trace_refetch_subaccount():
    trace = EventTrace()
    trace.add_dma_in(10)
    trace.add_dma_in(4, refetch=True)
    c = trace.counters[Phase.RESHAPE_ETC]
    assert c.dma_words_in == 14
    assert c.householder_refetch_words == 4


def test_spm_highwater_and_overflow():
    trace = EventTrace(spm_limit_bytes=40)
    trace.spm_acquire(5)
    trace.spm_release(2)
    trace.spm_acquire(3)
    assert trace.spm_resident_words == 6
    with pytest.raises(SpmOverflow):
        trace.spm_acquire(40 // WORD_BYTES)
    with pytest.raises(ValueError):
        trace.spm_release(100)


def _paper_times(variant):
    from ttedge.sim import REPORTED_PHASE_TIMES_MS

    return REPORTED_PHASE_TIMES_MS[variant]


def test_energy_report_published_cells():
    base = energy_report(_paper_times("baseline"), MachineConfig.baseline())
    by_phase = {r.phase: r for r in base}
    assert by_phase[Phase.HBD].energy_mj == pytest.approx(962.17, rel=5e-3)
    edge = energy_report(_paper_times("tt_edge"), MachineConfig.tt_edge())
    by_phase = {r.phase: r for r in edge}
    assert by_phase[Phase.HBD].energy_mj == pytest.approx(466.34, rel=5e-3)
    assert by_phase[Phase.HBD].core_gated
    assert by_phase[Phase.QR_DECOMP].energy_mj == pytest.approx(277.09, rel=5e-3)
    assert not by_phase[Phase.QR_DECOMP].core_gated


def test_energy_identity_is_exact():
    machine = MachineConfig.tt_edge()
    reports = energy_report(_paper_times("tt_edge"), machine)
    for r in reports:
        if r.core_gated:
            power = machine.power_mw.ttedge_gated
        else:
            power = machine.power_mw.ttedge_active
        assert r.energy_mj == r.time_ms * power / 1000.0


def test_summary_published_ratios():
    comp = summary(
        energy_report(_paper_times("baseline"), MachineConfig.baseline()),
        energy_report(_paper_times("tt_edge"), MachineConfig.tt_edge()),
    )
    assert comp.baseline_time_ms == pytest.approx(7729.52, abs=0.02)
    assert comp.speedup == pytest.approx(1.693, abs=0.001)
    assert comp.energy_reduction_pct == pytest.approx(40.18, abs=0.01)


def test_summary_identical_reports():
    reports = energy_report(_paper_times("baseline"), MachineConfig.baseline())
    comp = summary(reports, reports)
    assert comp.speedup == 1.0
    assert comp.energy_reduction_pct == 0.0


def test_summary_scaling_linearity():
    times = dict(_paper_times("baseline"))
    reports = energy_report(times, MachineConfig.baseline())
    times2 = dict(times)
    times2[Phase.HBD] *= 2.0
    reports2 = energy_report(times2, MachineConfig.baseline())
    comp = summary(reports2, reports)
    delta = times[Phase.HBD]
    assert comp.baseline_time_ms - comp.ttedge_time_ms == pytest.approx(delta, rel=1e-12)


def test_summary_phase_set_mismatch():
    full = energy_report(_paper_times("baseline"), MachineConfig.baseline())
    partial = energy_report(
        {Phase.HBD: 1.0, Phase.QR_DECOMP: 1.0}, MachineConfig.tt_edge()
    )
    with pytest.raises(PhaseSetMismatch):
        summary(full, partial)


def test_report_rows_columns():
    reports = energy_report(_paper_times("baseline"), MachineConfig.baseline())
    rows = report_rows("baseline", reports)
    assert list(rows[0].keys()) == ["variant", "phase", "time_ms", "energy_mj", "core_gated"]
    assert [r["phase"] for r in rows] == [
        "HBD",
        "QRDecomp",
        "SortTrunc",
        "UpdateSVDInput",
        "ReshapeEtc",
    ]
