"""QCL layout files: a small line-oriented text format.

    # comment
    layout <name>
    geometry cell=18 pitch=20 dots=9
    cell <x> <y> zone=<0..3> [input=<label>|output=<label>|fixed=<+1|-1>] [rot45]

Serialization is canonical: header first, then cells sorted by (y, x), so
serialize(parse(serialize(L))) reproduces the same bytes.
"""
from __future__ import annotations

import logging
import os

from .core import Cell, Function, GridGeometry, Layout, LayoutError, Rotation

log = logging.getLogger(__name__)


class QclError(LayoutError):
    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def strict_default() -> bool:
    return os.environ.get("QCA_STRICT", "1").strip() != "0"


def _int(tok: str, what: str, line: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise QclError(f"{what} must be an integer, got {tok!r}", line) from None


def _length(tok: str, what: str, line: int) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise QclError(f"{what} must be a number, got {tok!r}", line) from None
    if not v > 0:
        raise QclError(f"{what} must be positive", line)
    return v


def _split_kv(tok: str, line: int) -> tuple[str, str]:
    key, sep, value = tok.partition("=")
    if not sep or not key or not value:
        raise QclError(f"expected key=value, got {tok!r}", line)
    return key, value


def _parse_cell(toks: list[str], line: int, strict: bool) -> Cell:
    if len(toks) < 3:
        raise QclError("cell needs x and y", line)
    x = _int(toks[1], "x", line)
    y = _int(toks[2], "y", line)
    zone: int | None = None
    function, label, pol = Function.NORMAL, None, None
    rotation = Rotation.STANDARD
    for tok in toks[3:]:
        if tok == "rot45":
            rotation = Rotation.ROTATED45
            continue
        key, value = _split_kv(tok, line)
        if key == "zone":
            zone = _int(value, "zone", line)
            if zone not in range(4):
                raise QclError(f"zone out of range: {zone}", line)
        elif key in ("input", "output", "fixed"):
            if function is not Function.NORMAL:
                raise QclError("a cell takes at most one of input/output/fixed", line)
            if key == "fixed":
                if value not in ("+1", "-1", "1"):
                    raise QclError(f"fixed polarization must be +1 or -1, got {value}", line)
                function, pol = Function.FIXED, float(value)
            else:
                function = Function.INPUT if key == "input" else Function.OUTPUT
                label = value
        elif strict:
            raise QclError(f"unknown key {key!r}", line)
        else:
            log.warning("line %d: ignoring unknown key %r", line, key)
    if zone is None:
        raise QclError("cell is missing zone=", line)
    try:
        return Cell(x, y, zone, function, label, pol, rotation)
    except LayoutError as exc:
        raise QclError(str(exc), line) from None


def parse_layout(data: bytes | str, strict: bool | None = None) -> Layout:
    """Parse QCL text. Every error names the offending line."""
    if strict is None:
        strict = strict_default()
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    name: str | None = None
    geometry = GridGeometry()
    cells: list[Cell] = []
    where: dict[tuple[int, int], int] = {}
    labels: dict[tuple[Function, str], int] = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        toks = body.split()
        head = toks[0]
        if head == "layout":
            if len(toks) != 2:
                raise QclError("expected 'layout <name>'", n)
            if name is not None:
                raise QclError("duplicate layout line", n)
            name = toks[1]
        elif head == "geometry":
            vals = {"cell": geometry.cell_size, "pitch": geometry.pitch, "dots": geometry.dot_spacing}
            for tok in toks[1:]:
                key, value = _split_kv(tok, n)
                if key not in vals:
                    if strict:
                        raise QclError(f"unknown geometry key {key!r}", n)
                    log.warning("line %d: ignoring unknown geometry key %r", n, key)
                    continue
                vals[key] = _length(value, key, n)
            try:
                geometry = GridGeometry(vals["cell"], vals["pitch"], vals["dots"])
            except LayoutError as exc:
                raise QclError(str(exc), n) from None
        elif head == "cell":
            cell = _parse_cell(toks, n, strict)
            if cell.pos in where:
                raise QclError(f"duplicate cell at {cell.pos} (first on line {where[cell.pos]})", n)
            where[cell.pos] = n
            if cell.label is not None:
                key = (cell.function, cell.label)
                if key in labels:
                    raise QclError(f"duplicate {cell.function.value} label {cell.label!r}", n)
                labels[key] = n
            cells.append(cell)
        else:
            raise QclError(f"unrecognised line {head!r}", n)
    if name is None:
        raise QclError("missing 'layout <name>' line")
    return Layout(name, cells, geometry)


def _fmt_len(v: float) -> str:
    return f"{v:g}"


def serialize_layout(layout: Layout) -> bytes:
    g = layout.geometry
    lines = [
        f"layout {layout.name}",
        f"geometry cell={_fmt_len(g.cell_size)} pitch={_fmt_len(g.pitch)} dots={_fmt_len(g.dot_spacing)}",
    ]
    for c in layout.cells:
        parts = ["cell", str(c.x), str(c.y), f"zone={c.zone}"]
        if c.function is Function.INPUT:
            parts.append(f"input={c.label}")
        elif c.function is Function.OUTPUT:
            parts.append(f"output={c.label}")
        elif c.function is Function.FIXED:
            parts.append("fixed=+1" if c.polarization > 0 else "fixed=-1")
        if c.rotated:
            parts.append("rot45")
        lines.append(" ".join(parts))
    return ("\n".join(lines) + "\n").encode("utf-8")


def read_layout(path: str | os.PathLike, strict: bool | None = None) -> Layout:
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        return parse_layout(data, strict)
    except QclError as exc:
        raise QclError(f"{os.fspath(path)}: {exc}") from None


def write_layout(layout: Layout, path: str | os.PathLike) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_layout(layout))
