import pytest

from qcasim.core import Function, layout_metrics
from qcasim.designs import (MAX_COUNTER_BITS, SHIPPED, DesignSpec, Kind, build, counter,
                            counter_instances, counter_reference, shipped_layout, shipped_table,
                            reference_table)
from qcasim.core import LayoutError
from qcasim.logic import verify, verify_counter
from qcasim.qcl import parse_layout, serialize_layout


def test_counter_reference_examples():
    assert counter_reference(3, 0) == [0, 0, 0]
    assert counter_reference(3, 5) == [1, 0, 1]
    assert counter_reference(3, 8) == [0, 0, 0]


@pytest.mark.parametrize("bits", range(1, 9))
def test_counter_reference_is_binary_count(bits):
    for k in range(2 ** bits + 3):
        v = counter_reference(bits, k)
        assert sum(b << i for i, b in enumerate(v)) == k % 2 ** bits


def test_majority_is_five_cell_cross():
    lay = build(DesignSpec(Kind.MAJORITY))
    assert len(lay) == 5
    assert sorted(lay.input_labels) == ["a", "b", "c"] and lay.output_labels == ["y"]


def test_lstff_ports():
    lay = build(DesignSpec(Kind.LSTFF))
    assert set(lay.input_labels) == {"T", "clk"} and lay.output_labels == ["Q"]
    assert layout_metrics(lay).layers == 1


def test_edge_ports():
    lay = build(DesignSpec(Kind.EDGE_DETECTOR))
    assert lay.input_labels == ["clk"] and lay.output_labels == ["edge"]


def test_counter_ports():
    lay = build(DesignSpec(Kind.COUNTER, bits=3))
    assert lay.input_labels == ["clk"]
    assert sorted(lay.output_labels) == ["A0", "A1", "A2"]


def test_spec_validation():
    with pytest.raises(LayoutError):
        DesignSpec(Kind.WIRE, length=1)
    with pytest.raises(LayoutError):
        DesignSpec(Kind.COUNTER, bits=MAX_COUNTER_BITS + 1)
    with pytest.raises(LayoutError):
        DesignSpec(Kind.LSTFF, zone_origin=4)


@pytest.mark.parametrize("bits", [1, 2, 3, 4, 8])
def test_counter_composition(bits):
    inst = counter_instances(bits)
    assert [i.kind for i in inst].count("edge") == 1
    assert [i.kind for i in inst].count("lstff") == bits


def test_counter_cell_count_affine():
    sizes = [len(counter(n)) for n in range(1, 7)]
    steps = {b - a for a, b in zip(sizes, sizes[1:])}
    assert len(steps) == 1


@pytest.mark.parametrize("kind", list(Kind))
@pytest.mark.parametrize("origin", range(4))
def test_builds_round_trip(kind, origin):
    lay = build(DesignSpec(kind, zone_origin=origin))
    data = serialize_layout(lay)
    assert parse_layout(data) == lay
    assert layout_metrics(lay).cell_count == len(lay)


def test_zone_origin_shifts_every_zone():
    a, b = build(DesignSpec(Kind.LSTFF)), build(DesignSpec(Kind.LSTFF, zone_origin=1))
    assert [c.pos for c in a] == [c.pos for c in b]
    # fixed cells are clamped, their zone is irrelevant
    assert all((ca.zone + 1) % 4 == cb.zone for ca, cb in zip(a, b)
               if ca.function is not Function.FIXED)


@pytest.mark.parametrize("kind", [k for k in Kind if k is not Kind.COUNTER])
@pytest.mark.parametrize("origin", [0, 1])
def test_primitives_verify_at_zone_origin(kind, origin):
    spec = DesignSpec(kind, zone_origin=origin)
    assert verify(build(spec), reference_table(spec)).passed


def test_shipped_files_match_builders():
    names = {"wire": DesignSpec(Kind.WIRE), "inverter": DesignSpec(Kind.INVERTER),
             "majority": DesignSpec(Kind.MAJORITY), "xor": DesignSpec(Kind.XOR),
             "lstff": DesignSpec(Kind.LSTFF), "edge": DesignSpec(Kind.EDGE_DETECTOR)}
    names.update({f"counter{n}": DesignSpec(Kind.COUNTER, bits=n) for n in range(1, 5)})
    assert set(names) == set(SHIPPED)
    for name, spec in names.items():
        assert shipped_layout(name) == build(spec)
        if spec.kind is not Kind.COUNTER:
            assert shipped_table(name) == reference_table(spec)


def test_shipped_unknown():
    with pytest.raises(LayoutError):
        shipped_layout("nope")


def test_one_bit_counter_counts():
    r = verify_counter(counter(1), 1)
    assert r.passed and r.latency == 2.0

