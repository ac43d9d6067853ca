"""Command-line front end: compress, decompress, simulate, verify.

Exit codes: 0 success, 1 verification contract violation, 2 malformed
input file or machine config, 3 pipeline numerical failure (no
convergence, broken rank chain), 4 scratchpad overflow.

Every number printed here is recomputed through the library; the CLI adds
no arithmetic of its own.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .decomp import compression_ratio, reconstruction_error, tt_decode, tt_decompose
from .errors import (
    ConfigError,
    FormatError,
    NoConvergence,
    RankChainBroken,
    SpmOverflow,
    TTEdgeError,
)
from .formats import (
    read_cores,
    read_run_metadata,
    read_tensor,
    write_cores,
    write_run_metadata,
    write_tensor,
)
from .gemm import GemmExecutor
from .machine import MachineConfig, EventTrace, report_rows, summary
from .sim import REPORTED_PHASE_TIMES_MS, reported_reports, simulate_ttd
from .synth import synthetic_tensor

MACHINE_DIR_ENV = "TTEDGE_MACHINE_DIR"

EXIT_OK = 0
EXIT_CONTRACT = 1
EXIT_BAD_INPUT = 2
EXIT_NUMERIC = 3
EXIT_SPM = 4

# verification floor: exact float equality after lossy passes is unattainable
VERIFY_FLOOR = 1e-10


@dataclass
class RunManifest:
    command: str
    input: str | None = None
    output: str | None = None
    epsilon: float | None = None
    machine: str | None = None
    report: str = "text"
    seed: int = 0
    synthetic: str | None = None
    paper_times: bool = False
    archive: str | None = None

    def validate(self) -> None:
        if self.epsilon is not None and self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.command in ("compress", "simulate") and not self.paper_times:
            sources = sum(1 for s in (self.input, self.synthetic) if s)
            if sources != 1:
                raise ValueError("exactly one input source: --input or --synthetic")


def _load_machine(name: str) -> MachineConfig:
    if name == "baseline":
        return MachineConfig.baseline()
    if name in ("tt-edge", "tt_edge"):
        return MachineConfig.tt_edge()
    candidates = [Path(name)]
    search_dir = os.environ.get(MACHINE_DIR_ENV)
    if search_dir:
        candidates.append(Path(search_dir) / name)
        candidates.append(Path(search_dir) / f"{name}.json")
    for path in candidates:
        if path.is_file():
            return MachineConfig.load(path)
    raise ConfigError(f"no machine config named {name!r}")


def _load_input_tensor(manifest: RunManifest):
    if manifest.synthetic:
        return synthetic_tensor(manifest.synthetic, manifest.seed)
    return read_tensor(manifest.input)


def _emit(manifest: RunManifest, payload: dict, text_lines: list[str], csv_rows=None) -> None:
    if manifest.report == "json":
        print(json.dumps(payload, indent=2))
    elif manifest.report == "csv":
        rows = csv_rows if csv_rows is not None else [payload]
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
        sys.stdout.write(buf.getvalue())
    else:
        for line in text_lines:
            print(line)


def cmd_compress(manifest: RunManifest) -> int:
    manifest.validate()
    if manifest.output is None:
        print("compress needs --output", file=sys.stderr)
        return EXIT_BAD_INPUT
    epsilon = manifest.epsilon if manifest.epsilon is not None else 0.0
    try:
        tensor = _load_input_tensor(manifest)
    except (FormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    trace = EventTrace()
    try:
        cores = tt_decompose(tensor, epsilon, GemmExecutor.reference(), trace)
    except NoConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    ratio = compression_ratio(tensor.dims, cores)
    error = reconstruction_error(tensor, cores)
    write_cores(manifest.output, cores)
    metadata = {
        "epsilon": epsilon,
        "input_dims": list(tensor.dims),
        "ranks": list(cores.ranks),
        "compression_ratio": ratio,
        "reconstruction_error": error,
        "seed": manifest.seed,
    }
    write_run_metadata(manifest.output, metadata)
    payload = {
        "command": "compress",
        "input": manifest.input or f"synthetic:{manifest.synthetic}",
        "output": manifest.output,
        "dims": list(tensor.dims),
        "ranks": list(cores.ranks),
        "epsilon": epsilon,
        "compression_ratio": ratio,
        "reconstruction_error": error,
    }
    _emit(
        manifest,
        payload,
        [
            f"dims: {list(tensor.dims)}",
            f"ranks: {list(cores.ranks)}",
            f"compression ratio: {ratio:.6g}",
            f"reconstruction error: {error:.6g}",
        ],
    )
    return EXIT_OK


def cmd_decompress(manifest: RunManifest) -> int:
    if manifest.input is None or manifest.output is None:
        print("decompress needs --input and --output", file=sys.stderr)
        return EXIT_BAD_INPUT
    try:
        cores = read_cores(manifest.input)
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    try:
        tensor = tt_decode(cores)
    except RankChainBroken as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    write_tensor(manifest.output, tensor)
    payload = {
        "command": "decompress",
        "input": manifest.input,
        "output": manifest.output,
        "dims": list(tensor.dims),
    }
    _emit(manifest, payload, [f"decoded dims: {list(tensor.dims)}"])
    return EXIT_OK


def cmd_simulate(manifest: RunManifest) -> int:
    try:
        if manifest.machine is None:
            machines = [MachineConfig.baseline(), MachineConfig.tt_edge()]
        else:
            machines = [_load_machine(manifest.machine)]
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT

    if manifest.paper_times:
        runs = [(m.variant, reported_reports(m.variant)) for m in machines]
        if manifest.machine is None:
            machines_present = {v for v, _ in runs}
            assert machines_present == {"baseline", "tt_edge"}
    else:
        try:
            manifest.validate()
            tensor = _load_input_tensor(manifest)
        except (FormatError, OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_BAD_INPUT
        epsilon = manifest.epsilon if manifest.epsilon is not None else 0.0
        runs = []
        try:
            for m in machines:
                _, _, reports = simulate_ttd(tensor, epsilon, m)
                runs.append((m.variant, reports))
        except SpmOverflow as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_SPM
        except NoConvergence as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_NUMERIC

    rows = []
    sections = []
    for variant, reports in runs:
        rows.extend(report_rows(variant, reports))
        sections.append(
            {
                "variant": variant,
                "phases": report_rows(variant, reports),
                "total_time_ms": sum(r.time_ms for r in reports),
                "total_energy_mj": sum(r.energy_mj for r in reports),
            }
        )
    payload = {"command": "simulate", "runs": sections}
    text = []
    for section in sections:
        text.append(f"machine: {section['variant']}")
        text.append(f"  {'phase':<16}{'time_ms':>12}{'energy_mj':>12}  gated")
        for row in section["phases"]:
            text.append(
                f"  {row['phase']:<16}{row['time_ms']:>12.2f}{row['energy_mj']:>12.2f}  "
                f"{'yes' if row['core_gated'] else 'no'}"
            )
        text.append(
            f"  {'Total':<16}{section['total_time_ms']:>12.2f}{section['total_energy_mj']:>12.2f}"
        )
    by_variant = dict(runs)
    if set(by_variant) == {"baseline", "tt_edge"}:
        comp = summary(by_variant["baseline"], by_variant["tt_edge"])
        payload["summary"] = {
            "speedup": comp.speedup,
            "energy_reduction_pct": comp.energy_reduction_pct,
        }
        text.append(f"speedup: {comp.speedup:.3f}x")
        text.append(f"energy reduction: {comp.energy_reduction_pct:.2f}%")
    _emit(manifest, payload, text, csv_rows=rows)
    return EXIT_OK


def cmd_verify(manifest: RunManifest) -> int:
    if manifest.input is None or manifest.archive is None:
        print("verify needs --input and --archive", file=sys.stderr)
        return EXIT_BAD_INPUT
    try:
        tensor = read_tensor(manifest.input)
        cores = read_cores(manifest.archive)
        if manifest.epsilon is not None:
            epsilon = manifest.epsilon
        else:
            epsilon = float(read_run_metadata(manifest.archive)["epsilon"])
    except (FormatError, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    try:
        measured = reconstruction_error(tensor, cores)
    except TTEdgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    limit = max(1.05 * epsilon, VERIFY_FLOOR)
    ok = measured <= limit
    payload = {
        "command": "verify",
        "epsilon": epsilon,
        "measured_error": measured,
        "limit": limit,
        "ok": ok,
    }
    _emit(
        manifest,
        payload,
        [
            f"measured error: {measured:.6g}",
            f"limit: {limit:.6g}",
            f"result: {'ok' if ok else 'CONTRACT VIOLATION'}",
        ],
    )
    return EXIT_OK if ok else EXIT_CONTRACT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ttedge",
        description="Train-format tensor compression with a machine cost model",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, machine_default=None):
        p.add_argument("--input", help="input file path")
        p.add_argument("--output", help="output file path")
        p.add_argument("--epsilon", type=float, help="prescribed relative accuracy")
        p.add_argument(
            "--machine",
            default=machine_default,
            help="baseline, tt-edge, or a machine config JSON path "
            f"(also searched under ${MACHINE_DIR_ENV})",
        )
        p.add_argument("--report", choices=("json", "csv", "text"), default="text")
        p.add_argument("--seed", type=int, default=0, help="synthetic-input seed")
        p.add_argument(
            "--synthetic",
            help="generate the input: DIMS or DIMS,RANKS, e.g. 3x4x5 or 3x4x5,1x2x2x1",
        )

    common(sub.add_parser("compress", help="tensor file -> core archive"))
    common(sub.add_parser("decompress", help="core archive -> tensor file"))
    sim = sub.add_parser("simulate", help="run the machine cost model")
    common(sim)
    sim.add_argument(
        "--paper-times",
        action="store_true",
        help="price the reference phase times instead of running a decomposition",
    )
    ver = sub.add_parser("verify", help="check an archive against its accuracy contract")
    common(ver)
    ver.add_argument("--archive", help="core archive path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    manifest = RunManifest(
        command=args.command,
        input=args.input,
        output=args.output,
        epsilon=args.epsilon,
        machine=args.machine,
        report=args.report,
        seed=args.seed,
        synthetic=args.synthetic,
        paper_times=getattr(args, "paper_times", False),
        archive=getattr(args, "archive", None),
    )
    handlers = {
        "compress": cmd_compress,
        "decompress": cmd_decompress,
        "simulate": cmd_simulate,
        "verify": cmd_verify,
    }
    try:
        return handlers[manifest.command](manifest)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
