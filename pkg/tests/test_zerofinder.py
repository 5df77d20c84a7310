"""Tests for the location of stationary and transient zeros."""

import math

import numpy

from aiida_wellsplit.exceptions import DomainError
from aiida_wellsplit.utils import ZeroKind
from aiida_wellsplit.wellcore import WellState, make_alpha_state, mode_matrix
from aiida_wellsplit.zerofinder import (
    EDGE_MARGIN,
    is_stationary_node,
    stationary_nodes,
    zero_events,
    zeros_at_time,
)


def test_alpha_state_zero():
    """Test that the single interior zero of the alpha state is found at x0."""
    scan = zeros_at_time(make_alpha_state(0.375), 0.0)
    assert len(scan) == 1, f"Expected one zero, found {[e.x for e in scan]}"
    event = scan[0]
    assert abs(event.x - 0.375) < 1e-10
    assert event.kind is ZeroKind.TRANSIENT
    assert event.residual < 1e-10


def test_eigenstate_nodes():
    """Test that the nodes of an eigenstate are classified as stationary."""
    scan = zeros_at_time(WellState.eigenstate(3), 0.123)
    positions = [e.x for e in scan]
    assert numpy.allclose(positions, [1.0 / 3.0, 2.0 / 3.0], atol=1e-10)
    assert all(e.kind is ZeroKind.STATIONARY for e in scan)


def test_stationary_nodes():
    """Test the common nodes of the populated modes."""
    state = WellState.from_coefficients([0.0, 1.0, 0.0, 1.0])
    assert numpy.allclose(stationary_nodes(state), [0.5])
    assert stationary_nodes(make_alpha_state(0.3)) == []


def test_two_mode_zero_events():
    """Test the zero events of the alpha state over one revival period."""
    state = make_alpha_state(0.375)
    period = 2.0 / (3.0 * math.pi)
    scan = zero_events(state, (0.0, period))

    found = [(round(e.t, 9), round(e.x, 9)) for e in scan]
    expected = [
        (0.0, 0.375),
        (round(period / 2.0, 9), 0.625),
        (round(period, 9), 0.375),
    ]
    assert found == expected, f"Unexpected zero events: {found}"
    assert all(e.kind is ZeroKind.TRANSIENT for e in scan)


def test_multi_mode_zero_events():
    """Test the grid-refined zero events of a three-mode state with real amplitudes."""
    state = WellState.from_coefficients([1.0, 1.0, 1.0])
    scan = zero_events(state, (-0.01, 0.2), grid=(256, 256))
    assert len(scan) >= 2, "The real slice at t = 0 has two interior zeros."
    for event in scan:
        assert abs(state.evaluate(event.x, event.t)) < 1e-10
        assert 0.0 < event.x < 1.0
        assert -0.01 <= event.t <= 0.2
        assert event.kind is ZeroKind.TRANSIENT
    at_start = sorted(e.x for e in scan if abs(e.t) < 1e-9)
    assert numpy.allclose(at_start, [0.5, 2.0 / 3.0], atol=1e-9), at_start


def test_empty_window():
    """Test that an empty time window is rejected."""
    try:
        zero_events(make_alpha_state(0.375), (0.1, 0.1))
    except DomainError:
        pass
    else:
        raise AssertionError("No error raised for an empty time window.")


def test_shared_node_of_many_modes():
    """Test that a node shared by three modes is one stationary event."""
    state = WellState.from_coefficients([0.0, 1.0, 0.0, 1.0, 0.0, 1.0])
    scan = zero_events(state, (0.0, 0.05), grid=(256, 64))
    stationary = [e for e in scan if e.kind is ZeroKind.STATIONARY]
    assert len(stationary) == 1, f"{len(stationary)} stationary events reported."
    assert abs(stationary[0].x - 0.5) < 1e-12
    for event in scan:
        assert (event.kind is ZeroKind.STATIONARY) == is_stationary_node(
            state, event.x
        ), f"Misclassified zero at x = {event.x}, t = {event.t}"
        if event.kind is ZeroKind.TRANSIENT:
            assert abs(event.x - 0.5) > 1e-6
    for i, first in enumerate(scan):
        for second in scan[i + 1 :]:
            close = abs(first.x - second.x) < 1e-6 and abs(first.t - second.t) < 1e-6
            assert not close, f"Zero at ({first.x}, {first.t}) reported twice."


def test_two_mode_events_against_grid():
    """Test the events of the l = 1, 3 superposition against a brute-force grid."""
    state = WellState.from_coefficients([1.0, 0.0, 1.0])
    period = 1.0 / (4.0 * math.pi)
    scan = zero_events(state, (0.0, period))
    found = sorted((e.t, e.x) for e in scan)
    half = period / 2.0
    expected = [(0.0, 0.5), (half, 0.25), (half, 0.75), (period, 0.5)]
    assert len(found) == len(expected), f"Unexpected zero events: {found}"
    assert numpy.allclose(found, expected, rtol=0.0, atol=1e-7), found
    flat = [e for e in scan if abs(e.x - 0.5) < 1e-7]
    assert all(e.flat for e in flat), "The double zero at x = 0.5 is flat."

    xs = numpy.linspace(0.05, 0.95, 901)
    ts = numpy.linspace(0.0, period, 1001)
    phases = numpy.exp(-1j * numpy.outer(ts, state.energies))
    magnitude = numpy.abs((phases * state.coeffs) @ mode_matrix(state.segment, 3, xs))
    for i_t, i_x in numpy.argwhere(magnitude < 1e-2):
        near = [
            e
            for e in scan
            if abs(e.x - xs[i_x]) < 0.05 and abs(e.t - ts[i_t]) < 2e-3
        ]
        assert near, f"Grid minimum at ({xs[i_x]}, {ts[i_t]}) has no event."
    for event in scan:
        i_x = int(numpy.argmin(numpy.abs(xs - event.x)))
        i_t = int(numpy.argmin(numpy.abs(ts - event.t)))
        assert magnitude[i_t, i_x] < 5e-2


def test_mirror_symmetry():
    """Test that zeros half a revival apart are mirror images."""
    state = make_alpha_state(0.375)
    period = 2.0 / (3.0 * math.pi)
    scan = zero_events(state, (0.0, 2.0 * period))
    assert len(scan) == 5
    for event in scan:
        if event.t + 0.5 * period > 2.0 * period + 1e-12:
            continue
        partners = [
            e
            for e in scan
            if abs(e.t - event.t - 0.5 * period) < 1e-9
            and abs(e.x - (1.0 - event.x)) < 1e-9
        ]
        assert len(partners) == 1, f"No mirror image of ({event.x}, {event.t})."

    rng = numpy.random.default_rng(5)
    for x, t in rng.uniform(0.0, 1.0, size=(20, 2)):
        left = abs(state.evaluate(x, t))
        right = abs(state.evaluate(1.0 - x, t + 0.5 * period))
        assert abs(left - right) < 1e-12


def test_no_zero_at_the_walls():
    """Test that zeros within the wall margin are never reported."""
    state = make_alpha_state(0.375)
    for event in zero_events(state, (0.0, 1.0)):
        assert EDGE_MARGIN < event.x < 1.0 - EDGE_MARGIN
    assert len(zeros_at_time(make_alpha_state(1e-10), 0.0)) == 0
    assert all(
        EDGE_MARGIN < e.x < 1.0 - EDGE_MARGIN
        for e in zeros_at_time(WellState.eigenstate(7), 0.3)
    )
