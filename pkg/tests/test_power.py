import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcasim.core import Layout, fixed, input_cell, normal, output_cell
from qcasim.designs import shipped_layout, wire
from qcasim.engine import _raw_kink
from qcasim.power import (BOLTZMANN_MEV, GAMMA_LEVELS, PUBLISHED, PowerError, de_bruijn,
                          estimate_power, kink_energy_mev, power_map, read_pgm,
                          transition_stream)


def test_kink_energy_scale():
    # e^2/(4 pi eps0 eps_r) over the dot sum for half-charges, GaAs host
    ek = kink_energy_mev(wire(2))
    assert ek == pytest.approx(1439.964 / 12.9 * _raw_kink(20, 0, 9))
    assert ek == pytest.approx(1.4836, abs=1e-3)


@pytest.mark.parametrize("k,n", [(2, 2), (4, 2), (8, 2), (3, 3)])
def test_de_bruijn_covers_every_word_once(k, n):
    seq = de_bruijn(k, n)
    assert len(seq) == k ** n
    words = {tuple(seq[(i + j) % len(seq)] for j in range(n)) for i in range(len(seq))}
    assert len(words) == k ** n


def test_transition_stream_covers_all_pairs():
    s = transition_stream(["a", "b"])
    vecs = list(zip(s["a"], s["b"]))[2:]  # after warm-up
    pairs = set(zip(vecs, vecs[1:]))
    assert len(pairs) == 16 and len(vecs) == 17


def test_single_fixed_cell():
    lay = Layout("f", [fixed(0, 0, 1.0)])
    r = estimate_power(lay, 0.5, 2.0)
    assert r.avg_leakage == 0.0 and r.avg_switching == 0.0 and r.total == 0.0


def two_cell_oracle(gamma, temperature, drive_pairs):
    """Closed-form two-level bound for a follower driven by +-E_k."""
    ek = kink_energy_mev(wire(2))
    kt = BOLTZMANN_MEV * temperature

    def state(g, e):
        vec = np.array([-2 * g * ek, -e * ek])
        mag = np.linalg.norm(vec)
        return vec, -vec / mag * math.tanh(mag / (2 * kt))

    def released(after_vec, before_state):
        _, after_state = state(*after_vec)
        vec, _ = state(*after_vec)
        return max(0.0, 0.5 * vec @ (before_state - after_state))

    leak, sw = [], []
    for e0, e1 in drive_pairs:
        _, lo = state(0.01, e1)
        _, hi = state(gamma, e1)
        leak.append(released((gamma, e1), lo) + released((0.01, e1), hi))
        sw.append(released((gamma, e1), state(gamma, e0)[1]))
    return float(np.mean(leak)), float(np.mean(sw))


@pytest.mark.parametrize("gamma", GAMMA_LEVELS)
def test_two_cell_wire_matches_oracle(gamma):
    r = estimate_power(wire(2), gamma, 2.0)
    # the stream 0 0 1 1 0 on 'a' drives the output cell with -1 -1 +1 +1 -1
    pairs = [(-1, -1), (-1, 1), (1, 1), (1, -1)]
    leak, sw = two_cell_oracle(gamma, 2.0, pairs)
    assert r.transitions == 4
    assert r.avg_leakage == pytest.approx(leak, rel=1e-9)
    assert r.avg_switching == pytest.approx(sw, rel=1e-9)


def test_two_cell_wire_leakage_grows():
    low, high = estimate_power(wire(2), 0.5, 2.0), estimate_power(wire(2), 1.5, 2.0)
    assert high.avg_leakage > low.avg_leakage


def test_errors():
    lay = wire(2)
    with pytest.raises(PowerError):
        estimate_power(lay, 0.7, 2.0)
    with pytest.raises(PowerError):
        estimate_power(lay, 1.0, 0.0)
    with pytest.raises(PowerError):
        estimate_power(lay, -1.0, 2.0, free=True)
    assert estimate_power(lay, 0.7, 2.0, free=True).total > 0


@pytest.mark.parametrize("name", ["wire", "inverter", "majority", "xor", "lstff", "edge", "counter2"])
def test_trends_on_shipped_layouts(name):
    lay = shipped_layout(name)
    reps = [estimate_power(lay, g, 2.0) for g in GAMMA_LEVELS]
    leak = [r.avg_leakage for r in reps]
    sw = [r.avg_switching for r in reps]
    assert leak[0] < leak[1] < leak[2]
    assert sw[0] >= sw[1] >= sw[2]
    for r in reps:
        assert r.total == r.avg_leakage + r.avg_switching
        assert min(r.leakage) >= 0 and min(r.switching) >= 0


def test_deterministic_report():
    lay = shipped_layout("lstff")
    assert estimate_power(lay, 1.0, 2.0) == estimate_power(lay, 1.0, 2.0)


@settings(max_examples=25)
@given(st.floats(0.1, 3.0), st.floats(0.5, 300.0))
def test_free_levels_nonnegative(gamma, temperature):
    r = estimate_power(wire(3), gamma, temperature, free=True)
    assert all(v >= 0 for v in r.leakage + r.switching)


def test_csv_and_table():
    r = estimate_power(shipped_layout("lstff"), 0.5, 2.0)
    rows = r.to_csv().splitlines()
    assert rows[0] == "x,y,leakage_mev,switching_mev,total_mev"
    assert len(rows) == len(r.cells) + 2
    assert "leakage" in r.table() and "switching" in r.table()


def test_map_dimensions():
    lay = shipped_layout("lstff")
    img = read_pgm(power_map(estimate_power(lay, 1.0, 2.0), lay))
    x0, y0, x1, y1 = lay.bounds()
    assert len(img) == y1 - y0 + 1 and len(img[0]) == x1 - x0 + 1
    assert max(max(row) for row in img) == 255


def test_map_single_cell_full_intensity():
    lay = Layout("one", [fixed(0, 0, 1.0)])
    assert read_pgm(power_map(estimate_power(lay, 0.5, 2.0), lay)) == [[255]]


def test_map_uniform_layout():
    # a driver between two symmetric followers: both dissipate the same
    lay = Layout("sym", [output_cell(0, 0, "l"), input_cell(1, 0, "a"), output_cell(2, 0, "r")])
    img = read_pgm(power_map(estimate_power(lay, 1.0, 2.0), lay))
    assert img == [[255, 0, 255]]


def test_map_mismatch():
    r = estimate_power(wire(2), 0.5, 2.0)
    with pytest.raises(PowerError):
        power_map(r, wire(3))


def test_published_rows_are_additive():
    for leak, sw, total in PUBLISHED.values():
        for l, s, t in zip(leak, sw, total):
            assert l + s == pytest.approx(t, abs=0.02)
        assert leak[0] < leak[1] < leak[2] and sw[0] >= sw[1] >= sw[2]
