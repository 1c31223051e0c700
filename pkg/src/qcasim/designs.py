"""Layout builders for the gate primitives, the LST-FF, the falling-edge
detector and the n-bit synchronous counter.

Layouts are written as small character grids (see ``from_art``), one token
per grid position:

    .        empty
    0..3     normal cell in that clock zone
    r0..r3   rotated normal cell
    + / -    fixed cell at +1 / -1
    other    looked up in a legend of cell factories

Zones in the grids are relative; ``zone_origin`` shifts every zone of a
built layout by a constant (mod 4), which only delays the whole circuit.
"""
from __future__ import annotations

import enum
from importlib import resources
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .clocking import N_ZONES
from .core import Cell, Function, Layout, LayoutError, Rotation, fixed, input_cell, normal
from .logic import TruthTable, falling_edge
from .logic import majority as majority_fn

MAX_COUNTER_BITS = 8

CellFactory = Callable[[int, int, int], Cell]  # (x, y, zone shift) -> Cell


def _in(label: str) -> CellFactory:
    return lambda x, y, s: input_cell(x, y, label, s % N_ZONES)


def _out(label: str, zone: int, rot45: bool = False) -> CellFactory:
    rotation = Rotation.ROTATED45 if rot45 else Rotation.STANDARD
    return lambda x, y, s: Cell(x, y, (zone + s) % N_ZONES, Function.OUTPUT,
                                label=label, rotation=rotation)


def from_art(art: str, legend: Mapping[str, CellFactory] | None = None,
             origin: tuple[int, int] = (0, 0), zone_shift: int = 0) -> list[Cell]:
    """Cells for a token grid; the first row/column of ``art`` sits at ``origin``."""
    legend = legend or {}
    ox, oy = origin
    cells = []
    rows = [r for r in art.strip("\n").splitlines()]
    for y, row in enumerate(rows):
        for x, tok in enumerate(row.split()):
            px, py = ox + x, oy + y
            if tok == ".":
                continue
            if tok in legend:
                cells.append(legend[tok](px, py, zone_shift))
            elif tok in ("+", "-"):
                cells.append(fixed(px, py, 1.0 if tok == "+" else -1.0))
            elif tok in "0123":
                cells.append(normal(px, py, (int(tok) + zone_shift) % N_ZONES))
            elif len(tok) == 2 and tok[0] == "r" and tok[1] in "0123":
                cells.append(normal(px, py, (int(tok[1]) + zone_shift) % N_ZONES, rot45=True))
            else:
                raise LayoutError(f"unknown art token {tok!r}")
    return cells


class Kind(enum.Enum):
    WIRE = "wire"
    INVERTER = "inverter"
    MAJORITY = "majority"
    XOR = "xor"
    LSTFF = "lstff"
    EDGE_DETECTOR = "edge"
    COUNTER = "counter"


@dataclass(frozen=True)
class DesignSpec:
    kind: Kind
    zone_origin: int = 0
    length: int = 4  # wires only
    bits: int = 3  # counters only

    def __post_init__(self) -> None:
        if self.zone_origin not in range(N_ZONES):
            raise LayoutError(f"zone_origin must be in 0..3, got {self.zone_origin}")
        if self.kind is Kind.WIRE and self.length < 2:
            raise LayoutError("a wire needs at least 2 cells")
        if self.kind is Kind.COUNTER and not 1 <= self.bits <= MAX_COUNTER_BITS:
            raise LayoutError(f"counter bits must be in 1..{MAX_COUNTER_BITS}")

    @property
    def name(self) -> str:
        if self.kind is Kind.WIRE:
            return f"wire{self.length}"
        if self.kind is Kind.COUNTER:
            return f"counter{self.bits}"
        return self.kind.value


# --- primitives ----------------------------------------------------------

def wire(length: int, zone_origin: int = 0) -> Layout:
    """Straight wire: input, length-2 cells, output, all in one zone."""
    if length < 2:
        raise LayoutError("a wire needs at least 2 cells")
    z = zone_origin
    cells = [input_cell(0, 0, "a", z)]
    cells += [normal(x, 0, z) for x in range(1, length - 1)]
    cells.append(Cell(length - 1, 0, z, Function.OUTPUT, label="y"))
    return Layout(f"wire{length}", cells)


# Two rotated cells in a row between standard cells invert the signal.
_INVERTER = "A 0 r0 r0 Y"

_MAJORITY = """
. A .
B 0 Y
. C .
"""

# M(a, ~M(a, b, -1)) style two-level network folded around input a; the
# rotated runs supply the inversions.
_XOR = """
.  .  -  .
r0 r0 r0 r1
B  .  A  Y
r0 r0 .  r1
.  .  +  .
"""

# Majority-loop toggle cell: Q is stored in the zone-3/zone-0 ring around
# the device under the output and recirculates once per clock cycle.
_LSTFF = """
. . r1 . .
. . 3 . .
. T 0 C .
- r0 Y r0 +
. 3 2 . .
"""

# clk[c-1] arrives through a one-cycle delay line (zones 0..3), ~clk[c]
# through the rotated pair; the device ANDs them.
_EDGE = """
K 0 1 2 .
0 . . 3 .
0 r0 r0 0 E
. . . - .
"""


def inverter(zone_origin: int = 0) -> Layout:
    legend = {"A": _in("a"), "Y": _out("y", 0)}
    return Layout("inverter", from_art(_INVERTER, legend, zone_shift=zone_origin))


def majority(zone_origin: int = 0) -> Layout:
    legend = {"A": _in("a"), "B": _in("b"), "C": _in("c"), "Y": _out("y", 1)}
    return Layout("majority", from_art(_MAJORITY, legend, zone_shift=zone_origin))


def xor(zone_origin: int = 0) -> Layout:
    legend = {"A": _in("a"), "B": _in("b"), "Y": _out("y", 1)}
    return Layout("xor", from_art(_XOR, legend, zone_shift=zone_origin))


def lstff(zone_origin: int = 0) -> Layout:
    legend = {"T": _in("T"), "C": _in("clk"), "Y": _out("Q", 1, rot45=True)}
    return Layout("lstff", from_art(_LSTFF, legend, zone_shift=zone_origin))


def edge_detector(zone_origin: int = 0) -> Layout:
    legend = {"K": _in("clk"), "E": _out("edge", 1)}
    return Layout("edge", from_art(_EDGE, legend, zone_shift=zone_origin))


# --- counter -------------------------------------------------------------

# Toggle block used inside the counter. The incoming edge pulse P_k enters
# at J, drops through U and ent into the XOR ring (h1, F, h2 and the zone-0
# feeds), which folds it into the stored bit; the bit reappears at the
# zone-3 cell o every cycle and o doubles as the output A_k.
#
# Instead of a separate T line per bit, the pulse itself carries the AND
# chain: gate G forms P_{k+1} = M(P_k, A_k, -1), so bit k+1 sees
# edge AND T_{k+1} with T_{k+1} = A0 ... A_k. A branch of P_k runs under the
# ring to G; A_k is tapped off the ring below o.
#
# Every block sits exactly one clock cycle (four zones) after the previous
# one, so all blocks share the same zone pattern. Local coordinates: the
# ring's left column is x=0. Tokens are times in quarters; zone = time mod 4.
_RING = {
    (0, 1): "0", (0, 2): "0", (0, 3): "0",
    (1, 1): "0", (1, 2): "1", (1, 3): "0",
    (2, 0): "+", (2, 1): "r1", (2, 2): "r2", (2, 3): "r1", (2, 4): "-",
    (3, 1): "r0", (3, 3): "0",
    (-2, 3): "1", (-2, 2): "2", (-1, 2): "3",  # J, U, ent
    # weak in-line bias on U; without it U and ent power up at +1 and every
    # ring starts with a spurious toggle
    (-2, 0): "-",
}
_BRANCH = [(-2, 4), (-2, 5), (-2, 6)] + [(x, 6) for x in range(-1, 6)] + [(5, 5), (5, 4)]
# The run into G is kept to a single zone-0 cell: G relaxes towards -1
# (fixed input) and would otherwise pull a longer same-zone run with it.
_BRANCH_TIMES = [2, 2, 2, 2, 3, 3, 3, 3, 3, 3, 4, 4]
_GATE = {
    (4, 3): "5",  # A_k tap off the ring cell below o
    (5, 3): "5",  # G
    (5, 2): "-",
    (6, 3): "5", (7, 3): "5", (8, 3): "5",  # P_{k+1} towards the next J
}
BLOCK_PITCH = 11  # x distance between consecutive counter bits
BLOCK_ZONE_STEP = 4  # the edge pulse reaches bit k+1 one clock cycle after bit k
_A_OUT = (3, 2)  # the ring's zone-3 cell doubles as the bit output


@dataclass(frozen=True)
class Instance:
    """One placed sub-circuit of a composed layout."""

    kind: str
    index: int
    origin: tuple[int, int]
    zone_shift: int
    cells: tuple[Cell, ...] = field(repr=False)


def _tok_cell(x: int, y: int, tok: str, shift: int) -> Cell:
    if tok.isdigit():
        tok = str(int(tok) % N_ZONES)
    return from_art(tok, origin=(x, y), zone_shift=shift)[0]


def _counter_block(k: int, bits: int, shift: int) -> list[Cell]:
    """Cells of bit k, already translated and zone-shifted."""
    ox = BLOCK_PITCH * k
    toks = dict(_RING)
    if k != bits - 1:
        toks.update(zip(_BRANCH, map(str, _BRANCH_TIMES)))
        toks.update(_GATE)
    zs = shift + BLOCK_ZONE_STEP * k
    cells = [_tok_cell(ox + x, y, t, zs) for (x, y), t in toks.items()]
    ax, ay = _A_OUT
    cells.append(Cell(ox + ax, ay, (3 + zs) % N_ZONES, Function.OUTPUT, label=f"A{k}"))
    return cells


# Edge detector origin relative to bit 0: its output sits two cells left of
# bit 0's J, joined by one link cell.
_EDGE_ORIGIN = (-8, 1)
_LINK = (-3, 3)


def counter_instances(bits: int, zone_origin: int = 0) -> list[Instance]:
    if not 1 <= bits <= MAX_COUNTER_BITS:
        raise LayoutError(f"counter bits must be in 1..{MAX_COUNTER_BITS}")
    ex, ey = _EDGE_ORIGIN
    edge_cells = [c for c in edge_detector(zone_origin).translated(ex, ey).cells]
    # inside the counter the detector output is an ordinary wire cell
    edge_cells = [Cell(c.x, c.y, c.zone, rotation=c.rotation) if c.function is Function.OUTPUT
                  else c for c in edge_cells]
    edge_cells.append(normal(*_LINK, (1 + zone_origin) % N_ZONES))
    out = [Instance("edge", 0, (ex, ey), zone_origin, tuple(edge_cells))]
    for k in range(bits):
        out.append(Instance("lstff", k, (BLOCK_PITCH * k, 0),
                            (zone_origin + BLOCK_ZONE_STEP * k) % N_ZONES,
                            tuple(_counter_block(k, bits, zone_origin))))
    return out


def counter(bits: int, zone_origin: int = 0) -> Layout:
    """Edge detector plus ``bits`` toggle blocks. T0 = 1; the AND chain
    T_k = A0 ... A(k-1) is folded into the edge pulse passed along the blocks."""
    cells = [c for inst in counter_instances(bits, zone_origin) for c in inst.cells]
    return Layout(f"counter{bits}", cells)


def counter_reference(bits: int, falling_edges_seen: int) -> list[int]:
    """Little-endian count after ``falling_edges_seen`` falling clock edges."""
    if not 1 <= bits <= MAX_COUNTER_BITS:
        raise ValueError(f"bits must be in 1..{MAX_COUNTER_BITS}")
    if falling_edges_seen < 0:
        raise ValueError("falling_edges_seen must be nonnegative")
    n = falling_edges_seen % (1 << bits)
    return [(n >> k) & 1 for k in range(bits)]


def counter_output_delay(k: int) -> tuple[int, int]:
    """(cycles, quarter) after a falling-edge cycle at which A_k is valid."""
    q = 4 + BLOCK_ZONE_STEP * k
    return 1 + q // N_ZONES, q % N_ZONES


def build(spec: DesignSpec) -> Layout:
    o = spec.zone_origin
    if spec.kind is Kind.WIRE:
        return wire(spec.length, o)
    if spec.kind is Kind.INVERTER:
        return inverter(o)
    if spec.kind is Kind.MAJORITY:
        return majority(o)
    if spec.kind is Kind.XOR:
        return xor(o)
    if spec.kind is Kind.LSTFF:
        return lstff(o)
    if spec.kind is Kind.EDGE_DETECTOR:
        return edge_detector(o)
    if spec.kind is Kind.COUNTER:
        return counter(spec.bits, o)
    raise LayoutError(f"unknown design kind {spec.kind!r}")


def reference_table(spec: DesignSpec) -> TruthTable | None:
    """Behavioural truth table a built design is verified against; counters
    have none (they are checked with ``verify_counter``)."""
    k = spec.kind
    if k is Kind.WIRE:
        return TruthTable.from_function(["a"], ["y"], lambda a: a)
    if k is Kind.INVERTER:
        return TruthTable.from_function(["a"], ["y"], lambda a: 1 - a)
    if k is Kind.MAJORITY:
        return TruthTable.from_function(["a", "b", "c"], ["y"], majority_fn)
    if k is Kind.XOR:
        return TruthTable.from_function(["a", "b"], ["y"], lambda a, b: a ^ b)
    if k is Kind.LSTFF:
        rows = tuple(((t, c), ("flip" if t & c else "hold",)) for t in (0, 1) for c in (0, 1))
        return TruthTable(("T", "clk"), ("Q",), rows)
    if k is Kind.EDGE_DETECTOR:
        rows = tuple(((p, c), (str(falling_edge(p, c)),)) for p in (0, 1) for c in (0, 1))
        return TruthTable(("clk'", "clk"), ("edge",), rows)
    return None


SHIPPED = ("wire", "inverter", "majority", "xor", "lstff", "edge",
           "counter1", "counter2", "counter3", "counter4")


def shipped_layout(name: str) -> Layout:
    """One of the layouts bundled under ``qcasim/data`` (see ``SHIPPED``)."""
    from .qcl import parse_layout

    if name not in SHIPPED:
        raise LayoutError(f"no shipped layout {name!r}; choose from {', '.join(SHIPPED)}")
    return parse_layout(resources.files("qcasim").joinpath("data", f"{name}.qcl").read_bytes())


def shipped_table(name: str) -> TruthTable:
    from .logic import parse_table

    path = resources.files("qcasim").joinpath("data", f"{name}.tt")
    if not path.is_file():
        raise LayoutError(f"no shipped truth table {name!r}")
    return parse_table(path.read_text(encoding="utf-8"))
