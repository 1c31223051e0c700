import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcasim.clocking import ClockConfig
from qcasim.core import Cell, Function, GridGeometry, Layout, LayoutError, fixed, input_cell, normal, output_cell
from qcasim.designs import majority, shipped_layout, SHIPPED, wire
from qcasim.engine import (RADIUS_OF_EFFECT, SimState, SimulationError, build_kink_table,
                           kink_energy, relax_sample, simulate)
from qcasim.logic import sample_bit

G = GridGeometry()


def coulomb_kink(dx, dy, geometry=G):
    """Brute-force oracle: dot charges -1/2 where an electron sits, +1/2
    elsewhere; kink = E(opposite polarizations) - E(equal polarizations)."""
    h = geometry.dot_spacing / 2
    # clockwise from top-right, y pointing up
    dots = [(h, h), (h, -h), (-h, -h), (-h, h)]

    def charges(p):
        occupied = (0, 2) if p > 0 else (1, 3)
        return [-0.5 if k in occupied else 0.5 for k in range(4)]

    def energy(pa, pb):
        e = 0.0
        for (xa, ya), qa in zip(dots, charges(pa)):
            for (xb, yb), qb in zip(dots, charges(pb)):
                e += qa * qb / math.hypot(xb + dx * geometry.pitch - xa, yb + dy * geometry.pitch - ya)
        return e

    return energy(1, -1) - energy(1, 1)


def _pair(dx, dy, rot_a=False, rot_b=False):
    return normal(0, 0, rot45=rot_a), normal(dx, dy, rot45=rot_b)


def test_adjacent_is_one():
    assert kink_energy(*_pair(1, 0)) == pytest.approx(1.0)
    assert kink_energy(*_pair(0, 1)) == pytest.approx(1.0)


OFFSETS = [(dx, dy) for dx in range(-3, 4) for dy in range(-3, 4)
           if (dx, dy) != (0, 0) and math.hypot(dx, dy) <= RADIUS_OF_EFFECT]


@pytest.mark.parametrize("dx,dy", OFFSETS)
def test_kink_matches_coulomb_oracle(dx, dy):
    expected = coulomb_kink(dx, dy) / coulomb_kink(1, 0)
    assert kink_energy(*_pair(dx, dy)) == pytest.approx(expected, rel=1e-9, abs=1e-12)


def test_diagonal_is_weaker_and_negative():
    e = kink_energy(*_pair(1, 1))
    assert -1.0 < e < 0.0
    assert e == pytest.approx(-0.2174, abs=5e-4)


def test_beyond_radius_is_zero():
    assert kink_energy(*_pair(3, 0)) == 0.0
    assert kink_energy(*_pair(2, 2)) == 0.0


def test_coincident_cells():
    with pytest.raises(LayoutError):
        kink_energy(normal(0, 0), normal(0, 0))


def test_rotation_flips_sign():
    base = kink_energy(*_pair(1, 0))
    assert kink_energy(*_pair(1, 0, rot_a=True)) == -base
    assert kink_energy(*_pair(1, 0, rot_b=True)) == -base
    assert kink_energy(*_pair(1, 0, True, True)) == -base


def test_same_direction_decays():
    for step in [(1, 0), (0, 1)]:
        near = abs(kink_energy(*_pair(*step)))
        far = abs(kink_energy(*_pair(2 * step[0], 2 * step[1])))
        assert far <= near


def test_kink_table_symmetric():
    lay = shipped_layout("lstff")
    kt = build_kink_table(lay)
    n = len(lay)
    for i in range(n):
        for j in range(n):
            assert kt[i, j] == kt[j, i]


def _two_cell(gamma):
    lay = Layout("pair", [fixed(0, 0, 1.0), output_cell(1, 0, "y")])
    st = relax_sample(lay, build_kink_table(lay), [gamma] * 4, SimState(np.zeros(2)), {})
    return st


def test_follower_at_low_gamma():
    st = _two_cell(0.01)
    assert st.converged and st.polarization[1] > 0.95
    assert st.polarization[1] == pytest.approx(50 / math.sqrt(1 + 50 ** 2))


def test_follower_at_high_gamma():
    assert _two_cell(1.0).polarization[1] == pytest.approx(0.5 / math.sqrt(1.25))
    assert _two_cell(1.0).polarization[1] == pytest.approx(0.447, abs=1e-3)


def test_isolated_cell_stays_unpolarized():
    lay = Layout("iso", [input_cell(0, 0, "a"), output_cell(5, 5, "y")])
    st = relax_sample(lay, build_kink_table(lay), [0.01] * 4, SimState(np.zeros(2)), {"a": 1.0})
    assert st.polarization[1] == 0.0


def test_relax_needs_every_input():
    lay = Layout("w", [input_cell(0, 0, "a"), output_cell(1, 0, "y")])
    with pytest.raises(SimulationError):
        relax_sample(lay, build_kink_table(lay), [0.01] * 4, SimState(np.zeros(2)), {})


def test_wire_reproduces_pattern():
    pattern = [0, 1, 0, 1]
    tr = simulate(wire(3), {"a": pattern}, ClockConfig(cycles=4))
    # a single-zone wire settles by the end of its switch quarter
    assert [sample_bit(tr, "y", c, 0) for c in range(4)] == pattern


def test_majority_settles_to_one():
    tr = simulate(majority(), {"a": [1, 1], "b": [1, 1], "c": [0, 0]}, ClockConfig(cycles=2))
    assert sample_bit(tr, "y", 1, 1) == 1


def test_all_fixed_trace_is_constant():
    lay = Layout("f", [fixed(0, 0, 1.0), fixed(1, 0, -1.0)])
    tr = simulate(lay, {}, ClockConfig(cycles=2), record_cells=True)
    assert np.all(tr.cells == tr.cells[0])


def test_simulate_errors():
    lay = wire(3)
    with pytest.raises(SimulationError, match="missing"):
        simulate(lay, {}, ClockConfig(cycles=2))
    with pytest.raises(SimulationError, match="expected 2"):
        simulate(lay, {"a": [1]}, ClockConfig(cycles=2))
    with pytest.raises(SimulationError):
        simulate(lay, {"a": []}, ClockConfig(cycles=0))


def test_trace_lengths_and_csv_round_trip():
    cfg = ClockConfig(samples_per_cycle=32, cycles=3)
    tr = simulate(majority(), {"a": [1, 0, 1], "b": [0, 0, 1], "c": [1, 1, 0]}, cfg)
    assert tr.n_samples == 96
    assert all(len(v) == 96 for v in tr.signals.values())
    from qcasim.engine import Trace
    back = Trace.from_csv(tr.to_csv(), 32, inputs=tr.inputs)
    assert back.to_csv() == tr.to_csv()


def test_deterministic():
    cfg = ClockConfig(cycles=6)
    stim = {"T": [1, 1, 0, 1, 0, 1], "clk": [1, 0, 1, 1, 1, 0]}
    lay = shipped_layout("lstff")
    assert simulate(lay, stim, cfg).to_csv() == simulate(lay, stim, cfg).to_csv()


@pytest.mark.parametrize("name", SHIPPED)
def test_shipped_layouts_converge(name):
    lay = shipped_layout(name)
    stim = {label: [1, 0, 1, 1, 0, 0] for label in lay.input_labels}
    tr = simulate(lay, stim, ClockConfig(cycles=6))
    assert tr.nonconverged == 0


@st.composite
def standard_layouts(draw):
    pos = draw(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 3)),
                        min_size=2, max_size=14, unique=True))
    cells = []
    for k, (x, y) in enumerate(pos):
        kind = draw(st.sampled_from(["n", "n", "i", "f", "o"]))
        zone = draw(st.integers(0, 3))
        if kind == "i":
            cells.append(input_cell(x, y, f"i{k}", zone))
        elif kind == "f":
            cells.append(fixed(x, y, draw(st.sampled_from([-1.0, 1.0])), zone))
        elif kind == "o":
            cells.append(output_cell(x, y, f"o{k}", zone))
        else:
            cells.append(normal(x, y, zone))
    return Layout("rand", cells)


def _negated(lay):
    return Layout(lay.name, [Cell(c.x, c.y, c.zone, c.function, c.label, -c.polarization)
                             if c.function is Function.FIXED else c for c in lay.cells])


@settings(max_examples=40)
@given(standard_layouts(), st.data())
def test_polarization_bounds_and_odd_symmetry(lay, data):
    cfg = ClockConfig(samples_per_cycle=16, cycles=3)
    stim = {l: data.draw(st.lists(st.integers(0, 1), min_size=3, max_size=3)) for l in lay.input_labels}
    neg = {l: [1 - b for b in v] for l, v in stim.items()}
    a = simulate(lay, stim, cfg, record_cells=True)
    b = simulate(_negated(lay), neg, cfg, record_cells=True)
    assert np.all(np.abs(a.cells) <= 1.0)
    assert np.array_equal(a.cells, -b.cells)
