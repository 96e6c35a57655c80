import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gridflow.network import Branch, BranchKind, Bus, BusKind, Network, glover5
from gridflow.numerics import SingularMatrix
from gridflow.ybus import NotSupported, Sequence, build_ybus, thevenin_impedance

from netgen import random_network


def two_bus(**branch):
    buses = (Bus(1, BusKind.SLACK), Bus(2, BusKind.PQ))
    return Network(100.0, buses, (Branch(1, 2, **branch),))


@pytest.mark.parametrize(
    "i, j, expected",
    [
        (2, 2, 2.68 - 28.46j),
        (2, 5, -1.79 + 19.84j),
        (2, 4, -0.89 + 9.92j),
        (4, 5, -3.57 + 39.68j),
        (1, 5, -3.73 + 49.72j),
        (1, 1, 3.73 - 49.72j),
    ],
)
def test_glover5_entries(i, j, expected):
    y = build_ybus(glover5())
    assert abs(y[i, j] - expected) <= 0.01


def test_unit_reactance():
    y = build_ybus(two_bus(x=1.0))
    np.testing.assert_allclose(y.entries, [[-1j, 1j], [1j, -1j]])


def test_row_sums_are_the_shunt_terms():
    net = glover5()
    y = build_ybus(net)
    charging = {b: 0j for b in net.bus_ids}
    for br in net.branches:
        charging[br.from_bus] += 0.5j * br.b_charging
        charging[br.to_bus] += 0.5j * br.b_charging
    np.testing.assert_allclose(y.entries.sum(axis=1), [charging[b] for b in net.bus_ids], atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 8))
def test_symmetric_without_off_nominal_taps(seed, n):
    net = random_network(seed, n)
    flat = net.replace(branches=tuple(dataclasses.replace(b, tap=1.0) for b in net.branches))
    y = build_ybus(flat).entries
    np.testing.assert_allclose(y, y.T, atol=1e-12)


def test_nominal_tap_transformer_equals_line():
    line = build_ybus(two_bus(kind=BranchKind.LINE, r=0.01, x=0.1))
    tx = build_ybus(two_bus(kind=BranchKind.TRANSFORMER, r=0.01, x=0.1, tap=1.0))
    np.testing.assert_allclose(line.entries, tx.entries)


def test_tap_stamp():
    a = 1.05
    y = 1 / complex(0.01, 0.1)
    m = build_ybus(two_bus(kind=BranchKind.TRANSFORMER, r=0.01, x=0.1, tap=a)).entries
    np.testing.assert_allclose(m, [[y / a**2, -y / a], [-y / a, y]])


def test_zero_sequence_of_line_is_a_third():
    net = two_bus(r=0.01, x=0.1)
    y1, y0 = build_ybus(net), build_ybus(net, Sequence.ZERO)
    np.testing.assert_allclose(y0.entries, y1.entries / 3)


def test_phase_shift_not_supported():
    with pytest.raises(NotSupported):
        build_ybus(two_bus(kind=BranchKind.TRANSFORMER, x=0.1, phase_shift=0.1))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 6))
def test_thevenin_matches_matrix_inverse(seed, n):
    net = random_network(seed, n)
    y = build_ybus(net).with_shunts({b.id: -5j for b in net.buses if b.kind is not BusKind.PQ})
    z = np.linalg.inv(y.entries)
    for k, b in enumerate(y.bus_ids):
        assert thevenin_impedance(y, b) == pytest.approx(z[k, k], rel=1e-10)


def test_floating_network_has_no_thevenin():
    y = build_ybus(two_bus(x=0.1))
    with pytest.raises(SingularMatrix):
        thevenin_impedance(y, 2)
