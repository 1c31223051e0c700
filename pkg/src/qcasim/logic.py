"""Behavioural oracles, trace sampling, truth-table verification and latency.

A response is read at the last sample of a quarter cycle and thresholded
with a dead band: P > +0.5 is 1, P < -0.5 is 0, anything in between is an
``IndeterminateOutput``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .clocking import N_ZONES, ClockConfig, Phase
from .core import Function, Layout
from .engine import Trace, simulate

THRESHOLD = 0.5
SEQ_TOKENS = ("flip", "hold")
PREV = "'"  # suffix marking the previous-cycle value of an input


class VerifyError(ValueError):
    """Table and layout do not fit together, or the table is malformed."""


class IndeterminateOutput(ValueError):
    def __init__(self, label: str, sample: int, value: float) -> None:
        self.label, self.sample, self.value = label, sample, value
        super().__init__(f"{label} is indeterminate at sample {sample} (P = {value:+.3f})")


def majority(x: int, y: int, z: int) -> int:
    return int(x + y + z >= 2)


def lstff_next(t: int, clk: int, q_prev: int) -> int:
    return q_prev ^ (t & clk)


def falling_edge(prev_clk: int, cur_clk: int) -> int:
    return prev_clk & (1 - cur_clk)


# --- sampling --------------------------------------------------------------

def sample_index(trace: Trace, cycle: int, offset_quarters: int) -> int:
    """Last sample of quarter ``offset_quarters`` counted from the start of ``cycle``."""
    q = trace.samples_per_cycle // N_ZONES
    return cycle * trace.samples_per_cycle + (offset_quarters + 1) * q - 1


def threshold(label: str, sample: int, value: float) -> int:
    if value > THRESHOLD:
        return 1
    if value < -THRESHOLD:
        return 0
    raise IndeterminateOutput(label, sample, value)


def sample_bit(trace: Trace, label: str, cycle: int, offset_quarters: int) -> int:
    if label not in trace.signals:
        raise KeyError(f"no signal {label!r} in trace")
    s = sample_index(trace, cycle, offset_quarters)
    if not 0 <= s < trace.n_samples:
        raise IndexError(f"sample {s} outside trace of {trace.n_samples} samples")
    return threshold(label, s, float(trace.signals[label][s]))


def _quarter_bits(trace: Trace, label: str) -> list[int | None]:
    q = trace.samples_per_cycle // N_ZONES
    sig = trace.signals[label]
    out: list[int | None] = []
    for k in range(trace.n_samples // q):
        v = float(sig[(k + 1) * q - 1])
        out.append(1 if v > THRESHOLD else 0 if v < -THRESHOLD else None)
    return out


def measure_latency(trace: Trace, in_label: str, out_label: str,
                    out_zone: int | None = None) -> float:
    """Cycles from the first transition of ``in_label`` to the first
    determinate change of ``out_label``, at quarter resolution.

    Inputs switch at cycle boundaries, so a response that settles by the
    end of quarter k after the transition counts as (k + 1) / 4 cycles.
    With ``out_zone`` given, only quarters in which that zone is switched
    or holding are read; in the other two quarters the output cell is
    relaxed and only echoes its neighbours.
    """
    for label in (in_label, out_label):
        if label not in trace.signals:
            raise KeyError(f"no signal {label!r} in trace")
    spc = trace.samples_per_cycle
    drive = trace.signals[in_label]
    start = next((c for c in range(1, trace.cycles)
                  if (drive[c * spc] > 0) != (drive[(c - 1) * spc] > 0)), None)
    if start is None:
        raise VerifyError(f"input {in_label!r} never changes")
    bits = _quarter_bits(trace, out_label)
    if out_zone is not None:
        bits = [b if (k - out_zone) % N_ZONES in (Phase.SWITCH, Phase.HOLD) else None
                for k, b in enumerate(bits)]
    first = start * N_ZONES
    before = [b for b in bits[:first] if b is not None]
    base = before[-1] if before else next((b for b in bits[first:] if b is not None), None)
    for k in range(first, len(bits)):
        if bits[k] is not None and bits[k] != base:
            return (k - first + 1) / N_ZONES
    raise VerifyError(f"{out_label!r} never responds to {in_label!r}")


# --- truth tables ------------------------------------------------------------

@dataclass(frozen=True)
class TruthTable:
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    rows: tuple[tuple[tuple[int, ...], tuple[str, ...]], ...]

    def __post_init__(self) -> None:
        if not self.inputs or not self.outputs:
            raise VerifyError("a table needs inputs and outputs")
        seen = set()
        for ins, outs in self.rows:
            if len(ins) != len(self.inputs) or len(outs) != len(self.outputs):
                raise VerifyError(f"row {ins} -> {outs} does not match the labels")
            if any(b not in (0, 1) for b in ins):
                raise VerifyError(f"input bits must be 0/1: {ins}")
            if any(t not in ("0", "1") + SEQ_TOKENS for t in outs):
                raise VerifyError(f"bad output token in {outs}")
            if ins in seen:
                raise VerifyError(f"duplicate row {ins}")
            seen.add(ins)

    @property
    def transitional(self) -> bool:
        """Rows describe input changes: ``clk'`` is the previous value of ``clk``."""
        return any(label.endswith(PREV) for label in self.inputs)

    @property
    def sequential(self) -> bool:
        return any(t in SEQ_TOKENS for _, outs in self.rows for t in outs)

    def expected(self, row: int, prev: Sequence[int] = ()) -> tuple[int, ...]:
        """Output bits of ``row`` given the previous output bits."""
        _, outs = self.rows[row]
        res = []
        for k, tok in enumerate(outs):
            if tok in SEQ_TOKENS:
                q = prev[k]
                res.append(1 - q if tok == "flip" else q)
            else:
                res.append(int(tok))
        return tuple(res)

    @classmethod
    def from_function(cls, inputs: Sequence[str], outputs: Sequence[str], fn) -> "TruthTable":
        """Combinational table enumerating all input rows in binary order."""
        n = len(inputs)
        rows = []
        for k in range(1 << n):
            bits = tuple((k >> (n - 1 - i)) & 1 for i in range(n))
            val = fn(*bits)
            vals = val if isinstance(val, tuple) else (val,)
            rows.append((bits, tuple(str(int(v)) for v in vals)))
        return cls(tuple(inputs), tuple(outputs), tuple(rows))


def parse_table(text: str) -> TruthTable:
    inputs: list[str] | None = None
    outputs: list[str] | None = None
    rows = []
    for n, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        head, *rest = body.split()
        try:
            if head == "inputs":
                inputs = rest
            elif head == "outputs":
                outputs = rest
            elif head == "row":
                if "->" not in rest:
                    raise VerifyError("row needs '->'")
                cut = rest.index("->")
                ins = tuple(int(b) for b in rest[:cut])
                rows.append((ins, tuple(rest[cut + 1:])))
            else:
                raise VerifyError(f"unrecognised line {head!r}")
        except ValueError as exc:
            raise VerifyError(f"line {n}: {exc}") from None
    if inputs is None or outputs is None:
        raise VerifyError("table needs 'inputs' and 'outputs' lines")
    return TruthTable(tuple(inputs), tuple(outputs), tuple(rows))


def format_table(table: TruthTable) -> str:
    lines = ["inputs " + " ".join(table.inputs), "outputs " + " ".join(table.outputs)]
    for ins, outs in table.rows:
        lines.append("row " + " ".join(map(str, ins)) + " -> " + " ".join(outs))
    return "\n".join(lines) + "\n"


def read_table(path: str | os.PathLike) -> TruthTable:
    with open(path, encoding="utf-8") as fh:
        try:
            return parse_table(fh.read())
        except VerifyError as exc:
            raise VerifyError(f"{os.fspath(path)}: {exc}") from None


# --- verification ------------------------------------------------------------

@dataclass(frozen=True)
class RowResult:
    inputs: tuple[int, ...]
    expected: tuple[int, ...]
    observed: tuple[int | None, ...]
    context: str = ""
    reason: str = ""

    @property
    def passed(self) -> bool:
        return not self.reason and self.observed == self.expected


@dataclass
class VerifyReport:
    layout: str
    rows: list[RowResult] = field(default_factory=list)
    latency: float | None = None

    @property
    def passed(self) -> bool:
        return bool(self.rows) and all(r.passed for r in self.rows)

    def lines(self) -> list[str]:
        out = []
        for r in self.rows:
            obs = " ".join("?" if b is None else str(b) for b in r.observed)
            exp = " ".join(map(str, r.expected))
            tag = "PASS" if r.passed else "FAIL"
            ctx = f" [{r.context}]" if r.context else ""
            why = f"  {r.reason}" if r.reason else ""
            out.append(f"{tag} {' '.join(map(str, r.inputs))}{ctx} -> {obs} (expected {exp}){why}")
        lat = "n/a" if self.latency is None else f"{self.latency:g}"
        out.append(f"latency {lat} cycles; {'PASS' if self.passed else 'FAIL'}")
        return out


def _zone_of(layout: Layout, label: str) -> int:
    return next(c.zone for c in layout.cells if c.label == label and c.function is Function.OUTPUT)


def _base(label: str) -> str:
    return label[:-1] if label.endswith(PREV) else label


def _check_labels(layout: Layout, table: TruthTable) -> None:
    ins, outs = set(layout.input_labels), set(layout.output_labels)
    for label in table.inputs:
        if label.endswith(PREV) and _base(label) not in table.inputs:
            raise VerifyError(f"{label!r} needs a current-value column {_base(label)!r}")
    if {_base(label) for label in table.inputs} != ins:
        raise VerifyError(f"table inputs {sorted(table.inputs)} != layout inputs {sorted(ins)}")
    missing = set(table.outputs) - outs
    if missing:
        raise VerifyError(f"layout has no output(s) {sorted(missing)}")


def _stream(table: TruthTable, steps: Sequence[int]) -> dict[str, list[int]]:
    return {label: [table.rows[r][0][i] for r in steps] for i, label in enumerate(table.inputs)}


def _read(trace: Trace, labels: Sequence[str], cycle: int,
          lag: int) -> tuple[tuple[int | None, ...], str]:
    bits, reason = [], ""
    for label in labels:
        try:
            bits.append(sample_bit(trace, label, cycle, lag - 1))
        except IndeterminateOutput as exc:
            bits.append(None)
            reason = str(exc)
    return tuple(bits), reason


def _latency_pair(table: TruthTable) -> tuple[int, int, str, str] | None:
    """Two rows whose first differing input changes the first output."""
    rows = table.rows
    for a in range(len(rows)):
        for b in range(len(rows)):
            if a == b:
                continue
            ea, eb = table.expected(a, (0,) * len(table.outputs)), \
                table.expected(b, (0,) * len(table.outputs))
            for k, label in enumerate(table.outputs):
                if ea[k] != eb[k]:
                    i = next(i for i in range(len(table.inputs)) if rows[a][0][i] != rows[b][0][i])
                    return a, b, table.inputs[i], label
    return None


def verify(layout: Layout, table: TruthTable, config: ClockConfig | None = None) -> VerifyReport:
    """Simulate ``layout`` against ``table``.

    The latency is measured first from a two-row stream; every row is then
    read that many quarters after its inputs were applied. Sequential
    tables run as one stream from the power-on state (all outputs 0) that
    visits every row with each previous output value. Transition tables
    hold the previous input vector for two cycles, then switch to the
    current one.
    """
    config = config or ClockConfig()
    _check_labels(layout, table)
    if table.transitional:
        return _verify_transitions(layout, table, config)
    report = VerifyReport(layout.name)
    pair = _latency_pair(table)
    if pair is None:
        raise VerifyError("table never changes an output; latency is undefined")
    a, b, in_label, out_label = pair
    steps = [a, a, b, b, b, b]
    if table.sequential:
        # a single change from power-on, then hold so nothing else moves
        steps = [a, a, b] + [_hold_row(table)] * 3
    tr = simulate(layout, _stream(table, steps), config.with_cycles(len(steps)))
    report.latency = measure_latency(tr, in_label, out_label, _zone_of(layout, out_label))
    lag = round(report.latency * N_ZONES)
    tail = math.ceil(lag / N_ZONES) + 1
    if table.sequential:
        _verify_sequential(layout, table, config, lag, tail, report)
        return report

    def one(r: int) -> RowResult:
        steps = [r] * (1 + tail)
        tr = simulate(layout, _stream(table, steps), config.with_cycles(len(steps)))
        obs, reason = _read(tr, table.outputs, 1, lag)
        return RowResult(table.rows[r][0], table.expected(r), obs, reason=reason)

    with ThreadPoolExecutor() as pool:
        report.rows.extend(pool.map(one, range(len(table.rows))))
    return report


def _transition_stream(table: TruthTable, row: int, tail: int) -> dict[str, list[int]]:
    ins = dict(zip(table.inputs, table.rows[row][0]))
    out = {}
    for label in table.inputs:
        if label.endswith(PREV):
            continue
        prev = ins.get(label + PREV, ins[label])
        out[label] = [prev] * 2 + [ins[label]] * tail
    return out


def _verify_transitions(layout: Layout, table: TruthTable, config: ClockConfig) -> VerifyReport:
    if table.sequential:
        raise VerifyError("transition tables must have 0/1 outputs")
    report = VerifyReport(layout.name)

    def current(vals: dict[str, int], prev: bool) -> tuple[int, ...]:
        return tuple(vals.get(lab + PREV, vals[lab]) if prev else vals[lab]
                     for lab in table.inputs if not lab.endswith(PREV))

    rows = [dict(zip(table.inputs, ins)) for ins, _ in table.rows]
    steady = {current(v, False): r for r, v in enumerate(rows) if current(v, True) == current(v, False)}
    # latency: a row whose output differs from the steady state it leaves
    found = None
    for r, vals in enumerate(rows):
        changed = [lab for lab in table.inputs
                   if lab.endswith(PREV) and vals[lab] != vals[_base(lab)]]
        if not changed:
            continue
        before = current(vals, True)
        s = steady.get(before)
        if s is None:
            continue
        for k, label in enumerate(table.outputs):
            if table.expected(r)[k] != table.expected(s)[k]:
                found = (r, _base(changed[0]), label)
                break
        if found:
            break
    if found is None:
        raise VerifyError("no transition changes an output; latency is undefined")
    r, in_label, out_label = found
    stream = _transition_stream(table, r, 4)
    tr = simulate(layout, stream, config.with_cycles(6))
    report.latency = measure_latency(tr, in_label, out_label, _zone_of(layout, out_label))
    lag = round(report.latency * N_ZONES)
    tail = math.ceil(lag / N_ZONES) + 1

    def one(r: int) -> RowResult:
        stream = _transition_stream(table, r, tail)
        tr = simulate(layout, stream, config.with_cycles(2 + tail))
        obs, reason = _read(tr, table.outputs, 2, lag)
        return RowResult(table.rows[r][0], table.expected(r), obs, reason=reason)

    with ThreadPoolExecutor() as pool:
        report.rows.extend(pool.map(one, range(len(table.rows))))
    return report


def _hold_row(table: TruthTable) -> int:
    for r, (_, outs) in enumerate(table.rows):
        if all(t == "hold" for t in outs):
            return r
    raise VerifyError("a sequential table needs an all-hold row")


def _verify_sequential(layout: Layout, table: TruthTable, config: ClockConfig,
                       lag: int, tail: int, report: VerifyReport) -> None:
    n_out = len(table.outputs)
    flip = next((r for r, (_, outs) in enumerate(table.rows) if all(t == "flip" for t in outs)), None)
    if flip is None:
        raise VerifyError("a sequential table needs an all-flip row")
    hold = _hold_row(table)
    # (row, previous state) visits; the state walks from power-on 0
    steps: list[int] = [hold]
    checks: list[tuple[int, int, tuple[int, ...]]] = []
    state = (0,) * n_out
    for r in range(len(table.rows)):
        for want in (0, 1):
            if state != (want,) * n_out:
                steps.append(flip)
                state = table.expected(flip, state)
            prev = state
            steps.append(r)
            state = table.expected(r, state)
            checks.append((len(steps) - 1, r, prev))
    steps += [hold] * tail
    tr = simulate(layout, _stream(table, steps), config.with_cycles(len(steps)))
    for cycle, r, prev in checks:
        obs, reason = _read(tr, table.outputs, cycle, lag)
        ctx = "prev " + " ".join(map(str, prev))
        report.rows.append(RowResult(table.rows[r][0], table.expected(r, prev), obs, ctx, reason))


def auto_clock(cycles: int) -> list[int]:
    """Clock stimulus alternating 1, 0, 1, ... one level per cycle."""
    return [1 - (c % 2) for c in range(cycles)]


def verify_counter(layout: Layout, bits: int, config: ClockConfig | None = None,
                   edges: int | None = None) -> VerifyReport:
    """Drive ``layout`` with the auto clock and compare A0..A(bits-1) with
    the reference count after every falling edge, starting from power-on."""
    from .designs import counter_output_delay, counter_reference

    config = config or ClockConfig()
    labels = [f"A{k}" for k in range(bits)]
    if set(layout.input_labels) != {"clk"} or not set(labels) <= set(layout.output_labels):
        raise VerifyError(f"{layout.name} is not a {bits}-bit counter")
    edges = (1 << bits) + 2 if edges is None else edges
    delays = [counter_output_delay(k) for k in range(bits)]
    last = max(dc for dc, _ in delays)
    cycles = 2 * edges + last + 1
    tr = simulate(layout, {"clk": auto_clock(cycles)}, config.with_cycles(cycles))
    report = VerifyReport(layout.name)
    report.latency = measure_latency(tr, "clk", "A0", _zone_of(layout, "A0"))
    for k in range(edges + 1):
        expected = tuple(counter_reference(bits, k))
        obs: list[int | None] = []
        reason = ""
        for b, (dc, q) in enumerate(delays):
            # the k-th falling edge lands at the start of cycle 2k - 1; for
            # k = 0 this reads the power-on state one cycle before the first
            # edge could reach the output
            cycle = 2 * k - 1 + dc
            try:
                obs.append(sample_bit(tr, labels[b], cycle, q))
            except IndeterminateOutput as exc:
                obs.append(None)
                reason = str(exc)
        report.rows.append(RowResult((k,), expected, tuple(obs), f"edges {k}", reason))
    return report
