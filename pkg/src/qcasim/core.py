"""Cells, layouts, grid geometry and layout metrics.

Coordinates are integer grid positions in units of one cell pitch, with x
growing to the right and y growing downwards (row-major from the top-left,
the same orientation used by the PGM power maps).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Iterator


class LayoutError(ValueError):
    """Raised for structurally invalid cells or layouts."""


class Function(enum.Enum):
    NORMAL = "normal"
    INPUT = "input"
    OUTPUT = "output"
    FIXED = "fixed"


class Rotation(enum.Enum):
    STANDARD = "standard"
    ROTATED45 = "rot45"


@dataclass(frozen=True)
class DotOccupancy:
    """Electron occupancy of the four dots, numbered clockwise from top-right."""

    p1: int
    p2: int
    p3: int
    p4: int

    def __post_init__(self) -> None:
        for p in (self.p1, self.p2, self.p3, self.p4):
            if p not in (0, 1):
                raise LayoutError(f"dot occupancy flags must be 0 or 1, got {p!r}")

    @property
    def electrons(self) -> int:
        return self.p1 + self.p2 + self.p3 + self.p4


def polarization_from_occupancy(occ: DotOccupancy) -> float:
    n = occ.electrons
    if n != 2:
        raise LayoutError(f"malformed cell state: {n} electrons, expected 2")
    return ((occ.p1 + occ.p3) - (occ.p2 + occ.p4)) / n


@dataclass(frozen=True)
class GridGeometry:
    """Lengths in nm."""

    cell_size: float = 18.0
    pitch: float = 20.0
    dot_spacing: float = 9.0

    def __post_init__(self) -> None:
        if min(self.cell_size, self.pitch, self.dot_spacing) <= 0:
            raise LayoutError("geometry lengths must be positive")
        if self.cell_size > self.pitch:
            raise LayoutError("cell_size must not exceed pitch")


@dataclass(frozen=True)
class Cell:
    x: int
    y: int
    zone: int = 0
    function: Function = Function.NORMAL
    label: str | None = None
    polarization: float | None = None
    rotation: Rotation = Rotation.STANDARD

    def __post_init__(self) -> None:
        if self.zone not in (0, 1, 2, 3):
            raise LayoutError(f"zone out of range: {self.zone}")
        if self.function is Function.FIXED:
            if self.polarization not in (-1.0, 1.0):
                raise LayoutError(
                    f"fixed polarization must be -1 or +1, got {self.polarization!r}"
                )
        elif self.polarization is not None:
            raise LayoutError("only fixed cells carry a polarization")
        if self.function in (Function.INPUT, Function.OUTPUT):
            if not self.label:
                raise LayoutError(f"{self.function.value} cell needs a nonempty label")
        elif self.label is not None:
            raise LayoutError("only input/output cells carry a label")

    @property
    def pos(self) -> tuple[int, int]:
        return (self.x, self.y)

    @property
    def rotated(self) -> bool:
        return self.rotation is Rotation.ROTATED45

    def moved(self, dx: int, dy: int) -> "Cell":
        return Cell(self.x + dx, self.y + dy, self.zone, self.function,
                    self.label, self.polarization, self.rotation)


def normal(x: int, y: int, zone: int = 0, rot45: bool = False) -> Cell:
    rotation = Rotation.ROTATED45 if rot45 else Rotation.STANDARD
    return Cell(x, y, zone, rotation=rotation)


def input_cell(x: int, y: int, label: str, zone: int = 0) -> Cell:
    return Cell(x, y, zone, Function.INPUT, label=label)


def output_cell(x: int, y: int, label: str, zone: int = 0) -> Cell:
    return Cell(x, y, zone, Function.OUTPUT, label=label)


def fixed(x: int, y: int, polarization: float, zone: int = 0) -> Cell:
    return Cell(x, y, zone, Function.FIXED, polarization=float(polarization))


@dataclass(frozen=True)
class Layout:
    """An immutable, named set of cells on a shared grid.

    Cells are stored sorted by (y, x); that order is also the canonical
    serialization order and the Gauss-Seidel sweep order of the engine.
    """

    name: str
    cells: tuple[Cell, ...]
    geometry: GridGeometry = field(default_factory=GridGeometry)

    def __init__(self, name: str, cells: Iterable[Cell],
                 geometry: GridGeometry | None = None) -> None:
        if not name or any(ch.isspace() for ch in name):
            raise LayoutError(f"layout name must be a nonempty token, got {name!r}")
        ordered = tuple(sorted(cells, key=lambda c: (c.y, c.x)))
        seen: set[tuple[int, int]] = set()
        inputs: set[str] = set()
        outputs: set[str] = set()
        for c in ordered:
            if c.pos in seen:
                raise LayoutError(f"duplicate cell at {c.pos}")
            seen.add(c.pos)
            if c.function is Function.INPUT:
                if c.label in inputs:
                    raise LayoutError(f"duplicate input label {c.label!r}")
                inputs.add(c.label)
            elif c.function is Function.OUTPUT:
                if c.label in outputs:
                    raise LayoutError(f"duplicate output label {c.label!r}")
                outputs.add(c.label)
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "cells", ordered)
        object.__setattr__(self, "geometry", geometry or GridGeometry())

    def __len__(self) -> int:
        return len(self.cells)

    def __iter__(self) -> Iterator[Cell]:
        return iter(self.cells)

    @property
    def input_labels(self) -> list[str]:
        return [c.label for c in self.cells if c.function is Function.INPUT]

    @property
    def output_labels(self) -> list[str]:
        return [c.label for c in self.cells if c.function is Function.OUTPUT]

    def find(self, label: str) -> int:
        """Index of the input or output cell carrying ``label``."""
        for i, c in enumerate(self.cells):
            if c.label == label:
                return i
        raise KeyError(label)

    def bounds(self) -> tuple[int, int, int, int]:
        """(min_x, min_y, max_x, max_y) in grid units."""
        if not self.cells:
            raise LayoutError("empty layout")
        xs = [c.x for c in self.cells]
        ys = [c.y for c in self.cells]
        return min(xs), min(ys), max(xs), max(ys)

    def translated(self, dx: int, dy: int) -> "Layout":
        return Layout(self.name, (c.moved(dx, dy) for c in self.cells), self.geometry)

    def check_simulable(self) -> None:
        if not self.input_labels or not self.output_labels:
            raise LayoutError(
                f"layout {self.name!r} needs at least one input and one output cell"
            )


@dataclass
class Metrics:
    cell_count: int
    area: float  # um^2
    layers: int = 1
    latency: float | None = None  # clock cycles


def layout_metrics(layout: Layout) -> Metrics:
    if not layout.cells:
        raise LayoutError("empty layout")
    x0, y0, x1, y1 = layout.bounds()
    g = layout.geometry
    width = (x1 - x0) * g.pitch + g.cell_size
    height = (y1 - y0) * g.pitch + g.cell_size
    return Metrics(cell_count=len(layout.cells), area=width * height * 1e-6, layers=1)
