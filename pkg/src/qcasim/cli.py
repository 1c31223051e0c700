"""Command-line interface: ``qcasim <subcommand> ...``.

Exit status is 0 on success, 1 when a verification fails and 2 for usage,
parse and file errors. Every command that writes files also writes a run
manifest (``<output>.manifest.json``) recording the command line, the
hashes of its inputs and outputs and the tool version; ``qcasim replay``
re-runs it and checks that the outputs come out byte-identical.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from typing import Sequence

from . import __version__
from .clocking import ClockConfig
from .core import Layout, LayoutError, layout_metrics
from .designs import MAX_COUNTER_BITS, DesignSpec, Kind, build, reference_table
from .engine import SimulationError, Trace, simulate
from .logic import (VerifyError, auto_clock, format_table, read_table, verify,
                    verify_counter)
from .power import GAMMA_LEVELS, PowerError, estimate_power, power_map
from .qcl import read_layout, serialize_layout, strict_default

log = logging.getLogger("qcasim")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
MANIFEST_SUFFIX = ".manifest.json"


class UsageError(Exception):
    pass


# --- manifests ----------------------------------------------------------------

def _sha256(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


@dataclass
class RunManifest:
    command: list[str]
    inputs: dict[str, str] = field(default_factory=dict)  # path -> sha256
    outputs: dict[str, str] = field(default_factory=dict)
    overrides: dict[str, object] = field(default_factory=dict)
    version: str = __version__

    def to_json(self) -> str:
        body = {"tool": "qcasim", "version": self.version, "command": self.command,
                "overrides": self.overrides, "inputs": self.inputs, "outputs": self.outputs}
        return json.dumps(body, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        d = json.loads(text)
        try:
            return cls(list(d["command"]), dict(d["inputs"]), dict(d["outputs"]),
                       dict(d.get("overrides", {})), str(d["version"]))
        except (KeyError, TypeError) as exc:
            raise UsageError(f"malformed manifest: {exc}") from None


def _write_manifest(argv: Sequence[str], args: argparse.Namespace,
                    inputs: Sequence[str], outputs: Sequence[str]) -> str:
    """Manifest next to the first output; paths are stored relative to it."""
    path = outputs[0] + MANIFEST_SUFFIX
    base = os.path.dirname(os.path.abspath(path))

    def rel(p: str) -> str:
        return os.path.relpath(os.path.abspath(p), base)

    files = {os.path.abspath(p) for p in list(inputs) + list(outputs)}
    command = [rel(a) if os.path.abspath(a) in files else a for a in argv]
    overrides = {k: getattr(args, k) for k in ("samples_per_cycle", "gamma_high", "gamma_low")
                 if getattr(args, k, None) is not None}
    m = RunManifest(command, {rel(p): _sha256(p) for p in inputs},
                    {rel(p): _sha256(p) for p in outputs}, overrides)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(m.to_json())
    return path


def _replay(args: argparse.Namespace) -> int:
    text = _read_text(args.manifest)
    m = RunManifest.from_json(text)
    if m.version != __version__:
        log.warning("manifest written by qcasim %s, replaying with %s", m.version, __version__)
    base = os.path.dirname(os.path.abspath(args.manifest))
    cwd = os.getcwd()
    os.chdir(base)
    try:
        for p, digest in m.inputs.items():
            if not os.path.exists(p) or _sha256(p) != digest:
                raise UsageError(f"{p}: input changed since the manifest was written")
        # keep the original manifest; the rerun rewrites it identically
        status = run(m.command)
        if status != EXIT_OK:
            return status
        diff = [p for p, digest in m.outputs.items() if _sha256(p) != digest]
    finally:
        os.chdir(cwd)
    with open(args.manifest, "w", encoding="utf-8") as fh:
        fh.write(text)
    for p in diff:
        print(f"DIFFERS {p}")
    print("replay identical" if not diff else "replay differs")
    return EXIT_OK if not diff else EXIT_FAIL


# --- helpers ------------------------------------------------------------------

def _read_text(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror or exc}") from None


def _load_layout(path: str) -> Layout:
    try:
        return read_layout(path)
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror or exc}") from None


def _write_bytes(path: str, data: bytes) -> None:
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror or exc}") from None


def _config(args: argparse.Namespace) -> ClockConfig:
    base = ClockConfig()
    try:
        return ClockConfig(
            args.gamma_high if args.gamma_high is not None else base.gamma_high,
            args.gamma_low if args.gamma_low is not None else base.gamma_low,
            args.samples_per_cycle if args.samples_per_cycle is not None else base.samples_per_cycle,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def read_stimuli(path: str) -> dict[str, list[int]]:
    """TSV with a header of input labels and one 0/1 row per clock cycle."""
    rows = [r for r in csv.reader(io.StringIO(_read_text(path)), delimiter="\t")
            if r and not r[0].startswith("#")]
    if not rows:
        raise UsageError(f"{path}: empty stimulus file")
    header, body = [h.strip() for h in rows[0]], rows[1:]
    if len(set(header)) != len(header) or not all(header):
        raise UsageError(f"{path}: bad header {header}")
    out: dict[str, list[int]] = {h: [] for h in header}
    for n, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise UsageError(f"{path}: line {n}: expected {len(header)} columns")
        for h, v in zip(header, row):
            if v.strip() not in ("0", "1"):
                raise UsageError(f"{path}: line {n}: {h} must be 0 or 1, got {v!r}")
            out[h].append(int(v))
    return out


def format_stimuli(stimuli: dict[str, Sequence[int]]) -> str:
    labels = list(stimuli)
    n = len(stimuli[labels[0]]) if labels else 0
    lines = ["\t".join(labels)] + ["\t".join(str(stimuli[l][c]) for l in labels) for c in range(n)]
    return "\n".join(lines) + "\n"


def _fit(stimuli: dict[str, list[int]], cycles: int) -> dict[str, list[int]]:
    # shorter streams hold their last value; longer ones are cut
    out = {}
    for label, bits in stimuli.items():
        if not bits:
            raise UsageError(f"stimulus {label!r} is empty")
        out[label] = (bits + [bits[-1]] * cycles)[:cycles]
    return out


# --- subcommands --------------------------------------------------------------

def _cmd_gen(args: argparse.Namespace, argv: Sequence[str]) -> int:
    try:
        spec = DesignSpec(Kind(args.kind), zone_origin=args.zone_origin,
                          length=args.length, bits=args.bits)
    except LayoutError as exc:
        raise UsageError(str(exc)) from None
    layout = build(spec)
    _write_bytes(args.output, serialize_layout(layout))
    outputs = [args.output]
    if args.table:
        table = reference_table(spec)
        if table is None:
            raise UsageError(f"{args.kind} has no truth table; verify it with --counter")
        _write_bytes(args.table, format_table(table).encode())
        outputs.append(args.table)
    _write_manifest(argv, args, [], outputs)
    print(f"wrote {args.output} ({len(layout)} cells)")
    return EXIT_OK


def _cmd_sim(args: argparse.Namespace, argv: Sequence[str]) -> int:
    layout = _load_layout(args.layout)
    if args.stimuli is None and not args.auto_clock:
        raise UsageError("sim needs --stimuli (or --auto-clock for a clock-only layout)")
    stimuli = read_stimuli(args.stimuli) if args.stimuli else {}
    if args.auto_clock:
        if args.cycles is None:
            raise UsageError("--auto-clock needs --cycles")
        stimuli["clk"] = auto_clock(args.cycles)
    cycles = args.cycles or max(len(v) for v in stimuli.values())
    unknown = sorted(set(stimuli) - set(layout.input_labels))
    if unknown:
        raise UsageError(f"stimulus labels {unknown} are not inputs of {layout.name}")
    cfg = _config(args).with_cycles(cycles)
    tr = simulate(layout, _fit(stimuli, cycles), cfg)
    _write_bytes(args.output, tr.to_csv().encode())
    inputs = [args.layout] + ([args.stimuli] if args.stimuli else [])
    _write_manifest(argv, args, inputs, [args.output])
    print(f"wrote {args.output} ({tr.n_samples} samples, {cycles} cycles)")
    if tr.nonconverged:
        print(f"warning: {tr.nonconverged} sample(s) did not converge")
    return EXIT_OK


def _cmd_verify(args: argparse.Namespace, argv: Sequence[str]) -> int:
    layout = _load_layout(args.layout)
    cfg = _config(args)
    if args.counter:
        bits = sum(1 for l in layout.output_labels if l.startswith("A") and l[1:].isdigit())
        if not 1 <= bits <= MAX_COUNTER_BITS:
            raise UsageError(f"{args.layout}: no A0..An outputs, not a counter")
        report = verify_counter(layout, bits, cfg)
    else:
        if args.table is None:
            raise UsageError("verify needs --table (or --counter)")
        try:
            table = read_table(args.table)
        except OSError as exc:
            raise UsageError(f"{args.table}: {exc.strerror or exc}") from None
        report = verify(layout, table, cfg)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_FAIL


def _cmd_metrics(args: argparse.Namespace, argv: Sequence[str]) -> int:
    layout = _load_layout(args.layout)
    m = layout_metrics(layout)
    print(f"layout     {layout.name}")
    print(f"cells      {m.cell_count}")
    print(f"area       {m.area:.6f} um^2")
    print(f"layers     {m.layers}")
    return EXIT_OK


def _cmd_power(args: argparse.Namespace, argv: Sequence[str]) -> int:
    layout = _load_layout(args.layout)
    free = args.free or not strict_default()
    stimuli = None
    if args.stimuli:
        stimuli = read_stimuli(args.stimuli)
        stimuli = _fit(stimuli, max(len(v) for v in stimuli.values()))
    try:
        report = estimate_power(layout, args.ek, args.temp, stimuli, _config(args), free=free)
    except PowerError as exc:
        raise UsageError(str(exc)) from None
    print(report.table(), end="")
    outputs = []
    if args.csv:
        _write_bytes(args.csv, report.to_csv().encode())
        outputs.append(args.csv)
    if args.map:
        _write_bytes(args.map, power_map(report, layout))
        outputs.append(args.map)
    if outputs:
        inputs = [args.layout] + ([args.stimuli] if args.stimuli else [])
        _write_manifest(argv, args, inputs, outputs)
    return EXIT_OK


def render_svg(trace: Trace, labels: Sequence[str] | None = None) -> str:
    """Stacked waveforms, one row per label, with cycle grid lines."""
    labels = list(labels or trace.signals)
    w_plot, row_h, left, top = 800, 60, 90, 20
    n = trace.n_samples
    width, height = left + w_plot + 20, top + row_h * len(labels) + 30
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="monospace" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    for c in range(trace.cycles + 1):
        x = left + w_plot * c * trace.samples_per_cycle / max(n, 1)
        out.append(f'<line x1="{x:.2f}" y1="{top}" x2="{x:.2f}" y2="{height - 30}" '
                   f'stroke="#ddd"/>')
        if c < trace.cycles:
            out.append(f'<text x="{x + 2:.2f}" y="{height - 14}" fill="#888">{c}</text>')
    for r, label in enumerate(labels):
        sig = trace.signals[label]
        y0 = top + r * row_h + row_h / 2
        amp = row_h * 0.4
        pts = " ".join(f"{left + w_plot * s / max(n - 1, 1):.2f},{y0 - amp * float(v):.2f}"
                       for s, v in enumerate(sig))
        out.append(f'<text x="4" y="{y0 + 4:.2f}">{label}</text>')
        out.append(f'<line x1="{left}" y1="{y0:.2f}" x2="{left + w_plot}" y2="{y0:.2f}" '
                   f'stroke="#bbb" stroke-dasharray="4 4"/>')
        out.append(f'<polyline fill="none" stroke="#1f4e9e" stroke-width="1.2" points="{pts}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _cmd_plot(args: argparse.Namespace, argv: Sequence[str]) -> int:
    text = _read_text(args.trace)
    try:
        tr = Trace.from_csv(text, args.samples_per_cycle or ClockConfig().samples_per_cycle)
    except (ValueError, IndexError) as exc:
        raise UsageError(f"{args.trace}: {exc}") from None
    labels = args.labels.split(",") if args.labels else None
    if labels:
        missing = [l for l in labels if l not in tr.signals]
        if missing:
            raise UsageError(f"{args.trace}: no column(s) {missing}")
    _write_bytes(args.output, render_svg(tr, labels).encode())
    _write_manifest(argv, args, [args.trace], [args.output])
    print(f"wrote {args.output}")
    return EXIT_OK


# --- parser -------------------------------------------------------------------

def _clock_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("clock overrides")
    g.add_argument("--samples-per-cycle", type=int, metavar="N",
                   help="simulation samples per clock cycle (default 128, multiple of 4)")
    g.add_argument("--gamma-high", type=float, metavar="E",
                   help="tunneling energy of a relaxed zone, in kink energies (default 1.0)")
    g.add_argument("--gamma-low", type=float, metavar="E",
                   help="tunneling energy of a held zone, in kink energies (default 0.01)")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qcasim", description="Clocked QCA circuit simulator.")
    p.add_argument("--version", action="version", version=f"qcasim {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", metavar="command")

    g = sub.add_parser("gen", help="write the QCL layout of a built-in design")
    g.add_argument("kind", choices=[k.value for k in Kind], help="design to build")
    g.add_argument("--bits", type=int, default=3, help="counter width (default 3)")
    g.add_argument("--length", type=int, default=4, help="wire length in cells (default 4)")
    g.add_argument("--zone-origin", type=int, default=0, metavar="Z",
                   help="shift every clock zone by Z (0..3, default 0)")
    g.add_argument("-o", "--output", required=True, help="QCL file to write")
    g.add_argument("--table", metavar="FILE", help="also write the design's truth table")
    g.set_defaults(func=_cmd_gen)

    s = sub.add_parser("sim", help="simulate a layout and write its trace as CSV")
    s.add_argument("layout", help="QCL layout")
    s.add_argument("--stimuli", metavar="TSV",
                   help="one column per input label, one 0/1 row per clock cycle")
    s.add_argument("--cycles", type=int, metavar="N",
                   help="cycles to run (default: stimulus rows; short streams hold their last row)")
    s.add_argument("--auto-clock", action="store_true",
                   help="drive input 'clk' with 1, 0, 1, ... (needs --cycles)")
    s.add_argument("-o", "--output", required=True, help="trace CSV to write")
    _clock_flags(s)
    s.set_defaults(func=_cmd_sim)

    v = sub.add_parser("verify", help="check a layout against a truth table")
    v.add_argument("layout", help="QCL layout")
    v.add_argument("--table", metavar="FILE", help="truth table (.tt)")
    v.add_argument("--counter", action="store_true",
                   help="check outputs A0..An against the reference count instead")
    _clock_flags(v)
    v.set_defaults(func=_cmd_verify)

    m = sub.add_parser("metrics", help="print cell count, area and layer count")
    m.add_argument("layout", help="QCL layout")
    m.set_defaults(func=_cmd_metrics)

    w = sub.add_parser("power", help="estimate leakage and switching energy")
    w.add_argument("layout", help="QCL layout")
    w.add_argument("--ek", type=float, required=True, metavar="L",
                   help=f"tunneling energy level in kink energies, one of {GAMMA_LEVELS}")
    w.add_argument("--temp", type=float, default=2.0, metavar="K",
                   help="temperature in kelvin (default 2)")
    w.add_argument("--stimuli", metavar="TSV",
                   help="input stream (default: every ordered pair of input vectors)")
    w.add_argument("--map", metavar="PGM", help="write a per-cell dissipation map")
    w.add_argument("--csv", metavar="FILE", help="write per-cell energies as CSV")
    w.add_argument("--free", action="store_true",
                   help="accept any positive level (also QCA_STRICT=0)")
    _clock_flags(w)
    w.set_defaults(func=_cmd_power)

    pl = sub.add_parser("plot", help="render a trace CSV as an SVG waveform")
    pl.add_argument("trace", help="trace CSV written by sim")
    pl.add_argument("-o", "--output", required=True, help="SVG file to write")
    pl.add_argument("--labels", metavar="A,B", help="comma-separated columns to draw")
    pl.add_argument("--samples-per-cycle", type=int, metavar="N",
                    help="samples per cycle of the trace (default 128)")
    pl.set_defaults(func=_cmd_plot)

    r = sub.add_parser("replay", help="re-run a manifest and compare its outputs")
    r.add_argument("manifest", help="manifest JSON written next to an output")
    r.set_defaults(func=lambda a, argv: _replay(a))
    return p


def run(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args, argv)
    except (UsageError, LayoutError, VerifyError, SimulationError, PowerError) as exc:
        print(f"qcasim {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
