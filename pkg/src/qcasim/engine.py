"""Bistable-approximation simulation engine.

Every Normal/Output cell obeys P = x / sqrt(1 + x^2) with
x = sum_j E(i, j) P_j / (2 gamma), where E is the kink energy to each
neighbour inside the radius of effect and gamma is the tunneling energy of
the cell's clock zone. The self-consistent state is found per clock sample
by Gauss-Seidel sweeps in (y, x) order, warm-started from the previous
sample.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numba
import numpy as np

from .clocking import N_ZONES, ClockConfig, gamma_table
from .core import Cell, Function, GridGeometry, Layout, LayoutError

log = logging.getLogger(__name__)

RADIUS_OF_EFFECT = 2.5  # in pitches
TOLERANCE = 1e-3
MAX_ITERATIONS = 1000

# dot offsets (x right, y down), clockwise from top-right; +1 for dots 1 and 3
_DOT_SIGN = np.array([1.0, -1.0, 1.0, -1.0])
_DOT_UNIT = np.array([[0.5, -0.5], [0.5, 0.5], [-0.5, 0.5], [-0.5, -0.5]])


class SimulationError(RuntimeError):
    pass


def _raw_kink(dx_nm: float, dy_nm: float, dot_spacing: float) -> float:
    # kink = E(opposite) - E(same) for dot charges +-P/2, in arbitrary units
    a = _DOT_UNIT * dot_spacing
    b = a + np.array([dx_nm, dy_nm])
    r = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1)
    return -0.5 * float(np.sum(np.outer(_DOT_SIGN, _DOT_SIGN) / r))


@lru_cache(maxsize=64)
def _kink_by_offset(dx: int, dy: int, geometry: GridGeometry) -> float:
    dist = math.hypot(dx, dy)
    if dist > RADIUS_OF_EFFECT:
        return 0.0
    ref = _raw_kink(geometry.pitch, 0.0, geometry.dot_spacing)
    return _raw_kink(dx * geometry.pitch, dy * geometry.pitch, geometry.dot_spacing) / ref


def kink_energy(a: Cell, b: Cell, geometry: GridGeometry | None = None) -> float:
    """Signed kink energy between two cells, in units of the adjacent-pair value.

    Rotated cells reuse the standard dot sum with the sign flipped whenever
    either cell is rotated: a standard/rotated adjacency inverts, and a row of
    rotated cells alternates, so an even run of them between standard cells
    inverts while an odd run passes the value through.
    """
    if a.pos == b.pos:
        raise LayoutError(f"coincident cells at {a.pos}")
    e = _kink_by_offset(b.x - a.x, b.y - a.y, geometry or GridGeometry())
    if a.rotated or b.rotated:
        e = -e
    return e


@dataclass(frozen=True)
class KinkTable:
    """Sparse symmetric coupling matrix in CSR form (row i lists the j != i)."""

    indptr: np.ndarray
    indices: np.ndarray
    energies: np.ndarray

    def __getitem__(self, ij: tuple[int, int]) -> float:
        i, j = ij
        row = slice(self.indptr[i], self.indptr[i + 1])
        hit = np.nonzero(self.indices[row] == j)[0]
        return float(self.energies[row][hit[0]]) if hit.size else 0.0

    def neighbours(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        row = slice(self.indptr[i], self.indptr[i + 1])
        return self.indices[row], self.energies[row]


def build_kink_table(layout: Layout) -> KinkTable:
    reach = int(math.floor(RADIUS_OF_EFFECT))
    where = {c.pos: i for i, c in enumerate(layout.cells)}
    indptr = [0]
    indices: list[int] = []
    energies: list[float] = []
    for c in layout.cells:
        for dy in range(-reach, reach + 1):
            for dx in range(-reach, reach + 1):
                j = where.get((c.x + dx, c.y + dy))
                if j is None or (dx == 0 and dy == 0):
                    continue
                e = kink_energy(c, layout.cells[j], layout.geometry)
                if e != 0.0:
                    indices.append(j)
                    energies.append(e)
        indptr.append(len(indices))
    return KinkTable(np.array(indptr, dtype=np.int64),
                     np.array(indices, dtype=np.int64),
                     np.array(energies, dtype=np.float64))


@numba.njit(cache=True)
def _gauss_seidel(pol, indptr, indices, energies, free, gam, tol, max_iter):
    for it in range(1, max_iter + 1):
        worst = 0.0
        for k in range(free.size):
            i = free[k]
            drive = 0.0
            for p in range(indptr[i], indptr[i + 1]):
                drive += energies[p] * pol[indices[p]]
            x = drive / (2.0 * gam[i])
            new = x / math.sqrt(1.0 + x * x)
            delta = abs(new - pol[i])
            if delta > worst:
                worst = delta
            pol[i] = new
        if worst < tol:
            return it, True
    return max_iter, False


@dataclass
class SimState:
    polarization: np.ndarray
    sample_index: int = 0
    iterations: int = 0
    converged: bool = True


class _Prepared:
    """Index arrays shared by relax_sample and simulate."""

    def __init__(self, layout: Layout, kinks: KinkTable | None = None) -> None:
        self.layout = layout
        self.kinks = kinks or build_kink_table(layout)
        cells = layout.cells
        self.zone = np.array([c.zone for c in cells], dtype=np.int64)
        self.free = np.array(
            [i for i, c in enumerate(cells)
             if c.function in (Function.NORMAL, Function.OUTPUT)], dtype=np.int64)
        self.fixed = [(i, c.polarization) for i, c in enumerate(cells)
                      if c.function is Function.FIXED]
        self.inputs = {c.label: i for i, c in enumerate(cells)
                       if c.function is Function.INPUT}

    def clamp(self, pol: np.ndarray, driven: Mapping[str, float]) -> None:
        for i, p in self.fixed:
            pol[i] = p
        for label, i in self.inputs.items():
            try:
                pol[i] = driven[label]
            except KeyError:
                raise SimulationError(f"no drive for input {label!r}") from None


def relax_sample(layout: Layout, kinks: KinkTable, gammas: Sequence[float],
                 prev: SimState, driven_inputs: Mapping[str, float],
                 tol: float = TOLERANCE, max_iterations: int = MAX_ITERATIONS,
                 ) -> SimState:
    """One self-consistent solve at fixed per-zone gammas."""
    prep = _Prepared(layout, kinks)
    pol = np.array(prev.polarization, dtype=np.float64, copy=True)
    prep.clamp(pol, driven_inputs)
    gam = np.asarray(gammas, dtype=np.float64)[prep.zone]
    its, ok = _gauss_seidel(pol, prep.kinks.indptr, prep.kinks.indices,
                            prep.kinks.energies, prep.free, gam, tol, max_iterations)
    if not ok:
        log.warning("no convergence after %d iterations at sample %d", its, prev.sample_index)
    return SimState(pol, prev.sample_index + 1, its, ok)


@dataclass
class Trace:
    samples_per_cycle: int
    cycles: int
    gammas: np.ndarray  # (n_samples, 4)
    signals: dict[str, np.ndarray]  # label -> (n_samples,)
    inputs: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    nonconverged: int = 0
    cells: np.ndarray | None = None  # (n_samples, n_cells) when recorded

    @property
    def n_samples(self) -> int:
        return self.gammas.shape[0]

    def to_csv(self) -> str:
        labels = self.inputs + self.outputs
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sample"] + [f"zone{z}_gamma" for z in range(N_ZONES)] + labels)
        for s in range(self.n_samples):
            w.writerow([s] + [f"{g:.6f}" for g in self.gammas[s]]
                       + [f"{self.signals[l][s]:.6f}" for l in labels])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, samples_per_cycle: int,
                 inputs: Sequence[str] = ()) -> "Trace":
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], rows[1:]
        if header[:1 + N_ZONES] != ["sample"] + [f"zone{z}_gamma" for z in range(N_ZONES)]:
            raise ValueError("not a trace CSV")
        data = np.array([[float(v) for v in r[1:]] for r in body], dtype=np.float64)
        labels = header[1 + N_ZONES:]
        ins = [l for l in labels if l in inputs]
        return cls(samples_per_cycle, len(body) // samples_per_cycle,
                   data[:, :N_ZONES],
                   {l: data[:, N_ZONES + k] for k, l in enumerate(labels)},
                   inputs=ins, outputs=[l for l in labels if l not in ins])


def simulate(layout: Layout, stimuli: Mapping[str, Sequence[int]], config: ClockConfig,
             kinks: KinkTable | None = None, record_cells: bool = False) -> Trace:
    """Run the clocked layout over ``config.cycles`` cycles.

    ``stimuli`` maps every input label to one bit per clock cycle; bit b
    drives polarization 2b - 1 for the whole cycle.
    """
    if config.cycles <= 0:
        raise SimulationError("need at least one cycle")
    prep = _Prepared(layout, kinks)
    missing = sorted(set(prep.inputs) - set(stimuli))
    if missing:
        raise SimulationError(f"missing stimulus for input(s): {', '.join(missing)}")
    for label in prep.inputs:
        if len(stimuli[label]) != config.cycles:
            raise SimulationError(
                f"stimulus {label!r} has {len(stimuli[label])} bits, expected {config.cycles}")

    spc = config.samples_per_cycle
    table = gamma_table(config)
    n = len(layout.cells)
    n_samples = config.total_samples
    labelled = {c.label: i for i, c in enumerate(layout.cells) if c.label}
    signals = {label: np.empty(n_samples) for label in labelled}
    gammas = np.empty((n_samples, N_ZONES))
    cells = np.empty((n_samples, n)) if record_cells else None
    pol = np.zeros(n)
    kt = prep.kinks
    bad = 0
    for cyc in range(config.cycles):
        prep.clamp(pol, {l: 2.0 * int(stimuli[l][cyc]) - 1.0 for l in prep.inputs})
        for s in range(spc):
            idx = cyc * spc + s
            gam = table[s][prep.zone]
            _, ok = _gauss_seidel(pol, kt.indptr, kt.indices, kt.energies,
                                  prep.free, gam, TOLERANCE, MAX_ITERATIONS)
            bad += not ok
            gammas[idx] = table[s]
            for label, i in labelled.items():
                signals[label][idx] = pol[i]
            if cells is not None:
                cells[idx] = pol
    if bad:
        log.warning("%s: %d sample(s) did not converge", layout.name, bad)
    return Trace(spc, config.cycles, gammas, signals,
                 inputs=layout.input_labels, outputs=layout.output_labels,
                 nonconverged=bad, cells=cells)
