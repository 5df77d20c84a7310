"""Tests for the well with a delta barrier."""

import math

import numpy

from aiida_wellsplit.deltasolver import (
    degenerate_limit_pair,
    delta_eigenfunction,
    delta_spectrum,
    delta_sweep,
    finite_difference_levels,
)
from aiida_wellsplit.exceptions import DomainError
from aiida_wellsplit.units import Units
from aiida_wellsplit.utils import LevelClass, composite_gauss_legendre


def test_free_well_levels():
    """Test that a vanishing barrier reproduces the unperturbed spectrum."""
    spectrum = delta_spectrum(0.375, 0.0, count=6)
    expected = Units.PI2 * numpy.arange(1, 7) ** 2
    assert numpy.allclose(spectrum.energies, expected, rtol=1e-9)


def test_strong_barrier_ground_level():
    """Test the ground level for a strong barrier at x0 = 3/8."""
    energy = Units.to_pi2(delta_spectrum(0.375, 1e4, count=1).level(1).energy)
    assert 2.55 < energy < 2.56, f"E(1) = {energy} pi^2"


def test_levels_rise_with_barrier():
    """Test that the ground level rises monotonically with the barrier strength."""
    energies = [s.level(1).energy for s in delta_sweep(0.375, [1.0, 10.0, 100.0], 3)]
    assert energies[0] < energies[1] < energies[2]


def test_persistent_node_level():
    """Test the level with a node at the barrier, which ignores V."""
    spectrum = delta_spectrum(0.5, 100.0, count=4)
    level = spectrum.level(2)
    assert level.kind is LevelClass.PERSISTENT_NODE
    assert math.isclose(level.energy, 4.0 * Units.PI2, rel_tol=1e-12)
    assert abs(level.p_left - 0.5) < 1e-12
    assert spectrum.level(1).kind is LevelClass.GENERIC


def test_eigenfunction_jump_condition():
    """Test normalisation and the derivative jump of the eigenfunctions."""
    spectrum = delta_spectrum(0.3, 50.0, count=5)
    for index in range(1, 6):
        eigenfunction = delta_eigenfunction(spectrum, index)
        assert abs(eigenfunction.p_left + eigenfunction.p_right - 1.0) < 1e-12
        assert eigenfunction.jump_residual < 1e-8, (
            f"Jump condition violated for level {index}"
        )


def test_finite_difference_agreement():
    """Test the root-search levels against the finite-difference Hamiltonian."""
    spectrum = delta_spectrum(0.375, 50.0, count=3)
    reference = finite_difference_levels(0.375, 50.0, n_levels=3)
    assert numpy.allclose(spectrum.energies, reference, rtol=1e-3)


def test_degenerate_limit_pair():
    """Test that the confined pair reproduces the sub-well eigenmodes."""
    pair = degenerate_limit_pair(1.0 / 3.0)
    assert (pair.n, pair.m, pair.l) == (1, 2, 3)
    assert pair.levels == (2, 3)

    a, b = 1.0 / 3.0, 2.0 / 3.0
    left_x = numpy.linspace(0.0, a, 11)[1:-1]
    right_x = numpy.linspace(a, 1.0, 11)[1:-1]
    left_mode = math.sqrt(2.0 / a) * numpy.sin(numpy.pi * left_x / a)
    right_mode = math.sqrt(2.0 / b) * numpy.sin(2.0 * numpy.pi * (right_x - a) / b)

    assert numpy.allclose(pair.left_state.evaluate(left_x), left_mode, atol=1e-12)
    assert numpy.allclose(pair.left_state.evaluate(right_x), 0.0, atol=1e-12)
    assert numpy.allclose(pair.right_state.evaluate(left_x), 0.0, atol=1e-12)
    assert numpy.allclose(
        numpy.abs(pair.right_state.evaluate(right_x)), numpy.abs(right_mode), atol=1e-12
    )


def test_invalid_barrier_inputs():
    """Test that invalid barrier positions and strengths are rejected."""
    for x0, V in ((0.0, 1.0), (1.0, 1.0), (0.5, -1.0), (0.5, math.inf)):
        try:
            delta_spectrum(x0, V)
        except DomainError:
            continue
        raise AssertionError(f"No error raised for x0={x0}, V={V}.")
    try:
        degenerate_limit_pair(0.25, s=0)
    except DomainError:
        pass
    else:
        raise AssertionError("No error raised for degeneracy order 0.")


def test_impenetrable_limit():
    """Test that a very strong barrier approaches the right sub-well ground level."""
    energy = Units.to_pi2(delta_spectrum(0.375, 1e10, count=1).level(1).energy)
    assert abs(energy - 2.56) < 1e-4, f"E(1) = {energy} pi^2"


def test_persistent_level_at_three_eighths():
    """Test that the l = 8 level keeps its energy for every barrier strength."""
    for V in (1.0, 1e4, 1e10):
        spectrum = delta_spectrum(0.375, V, count=10)
        persistent = [lv for lv in spectrum if lv.kind is LevelClass.PERSISTENT_NODE]
        assert len(persistent) == 1, f"Expected one node level at V={V}"
        assert math.isclose(persistent[0].energy, 64.0 * Units.PI2, rel_tol=1e-12)


def _sub_well_levels(x0: float, count: int) -> numpy.ndarray:
    a, b = x0, 1.0 - x0
    left = [(n * math.pi / a) ** 2 for n in range(1, count + 1)]
    right = [(m * math.pi / b) ** 2 for m in range(1, count + 1)]
    return numpy.sort(left + right)[:count]


def test_degenerate_limit_pair_three_eighths():
    """Test the confined pair at x0 = 3/8 against the strong-barrier levels."""
    pair = degenerate_limit_pair(0.375)
    assert (pair.n, pair.m, pair.l) == (3, 5, 8)
    assert pair.levels == (7, 8)

    a, b = 0.375, 0.625
    left_x = numpy.linspace(0.0, a, 41)[1:-1]
    right_x = numpy.linspace(a, 1.0, 41)[1:-1]
    left_mode = math.sqrt(2.0 / a) * numpy.sin(3.0 * numpy.pi * left_x / a)
    right_mode = math.sqrt(2.0 / b) * numpy.sin(5.0 * numpy.pi * (right_x - a) / b)
    assert numpy.allclose(pair.left_state.evaluate(left_x), left_mode, atol=1e-12)
    assert numpy.allclose(pair.left_state.evaluate(right_x), 0.0, atol=1e-12)
    assert numpy.allclose(pair.right_state.evaluate(left_x), 0.0, atol=1e-12)
    assert numpy.allclose(
        numpy.abs(pair.right_state.evaluate(right_x)), numpy.abs(right_mode), atol=1e-12
    )

    spectrum = delta_spectrum(0.375, 1e10, count=8)
    low, high = spectrum.level(7), spectrum.level(8)
    assert high.kind is LevelClass.PERSISTENT_NODE
    assert math.isclose(low.k, pair.k, rel_tol=1e-8)
    assert math.isclose(high.k, pair.k, rel_tol=1e-14)
    x = numpy.linspace(0.0, 1.0, 401)
    strong = delta_eigenfunction(spectrum, 7).evaluate(x)
    limit = pair.limit.evaluate(x)
    defect = min(
        numpy.max(numpy.abs(strong - limit)), numpy.max(numpy.abs(strong + limit))
    )
    assert defect < 1e-5, f"Level 7 departs from the limit shape by {defect}"


def test_finite_difference_ten_levels():
    """Test ten levels against the finite-difference Hamiltonian."""
    for V in (10.0, 1e3):
        spectrum = delta_spectrum(0.375, V, count=10)
        reference = finite_difference_levels(0.375, V, n_levels=10)
        assert numpy.allclose(spectrum.energies, reference, rtol=1e-3), f"V = {V}"


def test_eigenfunctions_orthonormal():
    """Test the overlaps of the eigenfunctions by quadrature on both sides."""
    x0 = 0.3
    spectrum = delta_spectrum(x0, 50.0, count=8)
    functions = [delta_eigenfunction(spectrum, i).evaluate for i in range(1, 9)]
    overlaps = numpy.zeros((8, 8))
    for i, f in enumerate(functions):
        for j, g in enumerate(functions):
            overlaps[i, j] = composite_gauss_legendre(
                lambda x, f=f, g=g: f(x) * g(x), 0.0, x0
            ) + composite_gauss_legendre(lambda x, f=f, g=g: f(x) * g(x), x0, 1.0)
    assert numpy.allclose(overlaps, numpy.eye(8), atol=1e-12)


def test_levels_monotone_and_interlaced():
    """Test monotone growth in V and interlacing with the free well."""
    x0 = 0.3
    grid = numpy.logspace(-1.0, 6.0, 20)
    spectra = delta_sweep(x0, grid, count=8)
    free = Units.PI2 * numpy.arange(1, 10) ** 2
    confined = _sub_well_levels(x0, 8)
    previous = free[:8]
    for V, spectrum in zip(grid, spectra, strict=True):
        energies = spectrum.energies
        assert numpy.all(energies >= previous * (1.0 - 1e-12)), f"Level fell at V={V}"
        assert numpy.all(energies >= free[:8] * (1.0 - 1e-12))
        assert numpy.all(energies <= free[1:] * (1.0 + 1e-12)), f"V = {V}"
        assert numpy.all(energies <= confined * (1.0 + 1e-12)), f"V = {V}"
        previous = energies


def test_piecewise_solution_residual():
    """Test that each branch solves -psi'' = E psi and vanishes at the walls."""
    x0, h = 0.3, 1e-4
    spectrum = delta_spectrum(x0, 20.0, count=6)
    x = numpy.concatenate(
        [numpy.linspace(0.02, x0 - 0.02, 50), numpy.linspace(x0 + 0.02, 0.98, 50)]
    )
    for index in range(1, 7):
        level = spectrum.level(index)
        psi = delta_eigenfunction(spectrum, index)
        values = psi.evaluate(x)
        second = (psi.evaluate(x + h) - 2.0 * values + psi.evaluate(x - h)) / h**2
        scale = level.energy * numpy.max(numpy.abs(values))
        residual = numpy.max(numpy.abs(second + level.energy * values))
        assert residual < 1e-5 * scale, f"Level {index} residual {residual}"
        assert abs(psi.evaluate(0.0)) < 1e-14 and abs(psi.evaluate(1.0)) < 1e-12
        assert psi.shape.mismatch() < 1e-12


def test_impenetrable_union_of_sub_wells():
    """Test that very strong barriers converge to the sub-well spectra."""
    expected = _sub_well_levels(0.375, 10)
    for V in (1e12, 1e14, 1e15, 1e16):
        energies = delta_spectrum(0.375, V, count=10).energies
        assert numpy.allclose(energies, expected, rtol=1e-9), f"V = {V}"
