"""Instantaneous splitting of a well at wavefunction zeros."""

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy

from aiida_wellsplit.exceptions import DomainError, TruncationError, WellSplitError
from aiida_wellsplit.units import Units
from aiida_wellsplit.utils import LOGGER, composite_gauss_legendre
from aiida_wellsplit.wellcore import (
    WellSegment,
    WellState,
    mean_energy,
    mode_matrix,
    mode_overlap_matrix,
)

LOGGER = LOGGER.getChild("splitter")

DEFAULT_CAPS = (200, 200)
ZERO_TOL = 1e-8
DEGENERACY_TOL = 1e-12
TIE_TOL = 1e-9
ENERGY_TOL = 1e-6
TAIL_BUDGET = 1e-3
MIN_POST_SPLIT_NORM = 0.999


@dataclass(frozen=True)
class SplitConfig:
    """Barrier positions chi_1 < ... < chi_N inside a well of length L."""

    chis: tuple[float, ...]
    length: float = Units.LENGTH

    def __post_init__(self):
        chis = tuple(float(c) for c in numpy.atleast_1d(self.chis))
        if not chis:
            raise DomainError("A split needs at least one barrier position.")
        if any(not 0.0 < c < self.length for c in chis):
            raise DomainError(f"Barrier positions must lie in (0, {self.length}).")
        if any(b <= a for a, b in zip(chis, chis[1:])):
            raise DomainError(f"Barrier positions must increase strictly: {chis}.")
        object.__setattr__(self, "chis", chis)

    @property
    def boundaries(self) -> tuple[float, ...]:
        """Positions chi_0 = 0, chi_1, ..., chi_N, chi_{N+1} = L."""
        return (0.0, *self.chis, self.length)

    @property
    def segments(self) -> tuple[WellSegment, ...]:
        """The sub-wells j = 1..N+1."""
        edges = self.boundaries
        return tuple(WellSegment(a, b) for a, b in zip(edges, edges[1:]))

    @property
    def n_wells(self) -> int:
        """Number of sub-wells N + 1."""
        return len(self.chis) + 1

    def segment(self, j: int) -> WellSegment:
        """Return sub-well j, counted from 1."""
        if not 1 <= j <= self.n_wells:
            raise DomainError(f"Sub-well index {j} outside 1..{self.n_wells}.")
        return self.segments[j - 1]


def _check_geometry(state: WellState, cfg: SplitConfig) -> None:
    seg = state.segment
    if seg.left != 0.0 or not math.isclose(seg.right, cfg.length, rel_tol=1e-15):
        raise DomainError(
            f"State lives on [{seg.left}, {seg.right}] but the split expects "
            f"[0, {cfg.length}]."
        )


def _check_zeros(state: WellState, cfg: SplitConfig, t: float, tol: float) -> list:
    misplaced = []
    for chi in cfg.chis:
        value = abs(state.evaluate(chi, t))
        if value > tol:
            LOGGER.warning(f"Barrier at x={chi} is not at a zero: |Psi|={value:.3e}.")
            misplaced.append(chi)
    return misplaced


def split_probabilities(
    state: WellState, cfg: SplitConfig, t: float = 0.0, zero_tol: float = ZERO_TOL
) -> numpy.ndarray:
    """
    Return the probability P(j) of finding the particle in each sub-well.

    The integrals of |Psi|^2 are evaluated in closed form from the mode
    overlaps. A barrier that does not sit on a zero only produces a warning.

    Parameters
    ----------
    state : WellState
        State in the unsplit well.
    cfg : SplitConfig
        Barrier positions.
    t : float
        Time of the split.
    zero_tol : float
        Largest |Psi(chi)| accepted as a zero.

    Returns
    -------
    numpy.ndarray
        P(j) for j = 1..N+1.
    """
    _check_geometry(state, cfg)
    _check_zeros(state, cfg, t, zero_tol)
    coeffs = state.coefficients_at(t)
    probs = numpy.array(
        [
            float(
                numpy.real(
                    numpy.conj(coeffs)
                    @ mode_overlap_matrix(state.segment, state.n_modes, a, b)
                    @ coeffs
                )
            )
            for a, b in zip(cfg.boundaries, cfg.boundaries[1:])
        ]
    )
    if numpy.any(probs < -1e-12) or numpy.any(probs > 1.0 + 1e-12):
        raise WellSplitError(f"Sub-well probabilities left [0, 1]: {probs}.")
    return numpy.clip(probs, 0.0, 1.0)


def _sine_ratio(l: int, width: float, n: numpy.ndarray, length: float):
    """Evaluate sin(l pi w / L) / (l^2 w^2 - n^2 L^2), with the resonant limit."""
    n = numpy.asarray(n, dtype=float)
    gap = l * width - n * length
    resonant = numpy.abs(gap) < DEGENERACY_TOL * length
    denom = numpy.where(resonant, 1.0, (l * width) ** 2 - (n * length) ** 2)
    regular = math.sin(l * math.pi * width / length) / denom
    limit = numpy.where(n % 2 == 0, 1.0, -1.0) * math.pi / (2.0 * n * length**2)
    return numpy.where(resonant, limit, regular)


def simple_coefficients(
    x0: float, n_max: int = DEFAULT_CAPS[1], length: float = Units.LENGTH
) -> tuple[numpy.ndarray, numpy.ndarray]:
    """
    Decompose the alpha-state into the modes of the two sub-wells split at x0.

    Parameters
    ----------
    x0 : float
        Position of the zero, 0 < x0 <= L/2. At x0 = L/2 the state is the pure
        second mode.
    n_max : int
        Number of sub-well modes returned for each side.
    length : float
        Well length L.

    Returns
    -------
    tuple[numpy.ndarray, numpy.ndarray]
        The amplitudes a_n of the left well [0, x0] and b_m of the right well
        [x0, L], for n, m = 1..n_max.
    """
    if not 0.0 < x0 <= 0.5 * length:
        raise DomainError(f"The zero position must lie in (0, L/2], got {x0}.")
    if n_max < 1:
        raise DomainError(f"n_max must be at least 1, got {n_max}.")
    alpha = 2.0 * math.cos(math.pi * x0 / length)
    norm = math.sqrt(alpha**2 + 1.0)
    right = length - x0
    n = numpy.arange(1, n_max + 1)
    sign = numpy.where(n % 2 == 0, 1.0, -1.0)

    a = (2.0 * n * length**1.5 * math.sqrt(x0) * sign / (math.pi * norm)) * (
        alpha * _sine_ratio(1, x0, n, length) - _sine_ratio(2, x0, n, length)
    )
    b = (-2.0 * n * length**1.5 * math.sqrt(right) / (math.pi * norm)) * (
        alpha * _sine_ratio(1, right, n, length) + _sine_ratio(2, right, n, length)
    )
    return a, b


def _overlap_block(seg: WellSegment, length: float, l_max: int, k_max: int):
    """Closed-form overlaps <k_j | l> of sub-well modes with full-well modes."""
    width = seg.width
    ls = numpy.arange(1, l_max + 1)[None, :]
    ks = numpy.arange(1, k_max + 1)[:, None]
    right = numpy.sin(ls * numpy.pi * seg.right / length)
    left = numpy.sin(ls * numpy.pi * seg.left / length)
    sign = numpy.where(ks % 2 == 0, 1.0, -1.0)
    resonant = numpy.abs(ls * width - ks * length) < DEGENERACY_TOL * length
    denom = numpy.where(resonant, 1.0, (ls * width) ** 2 - (ks * length) ** 2)
    regular = (
        2.0 * ks * length * math.sqrt(length * width) / numpy.pi
        * (sign * right - left) / denom
    )
    limit = math.sqrt(width / length) * numpy.cos(ls * numpy.pi * seg.left / length)
    return numpy.where(resonant, limit, regular)


@dataclass(frozen=True)
class BasisChangeMatrix:
    """
    Change of basis from full-well modes to the modes of each sub-well.

    ``blocks[j - 1][k - 1, l - 1]`` holds A_{k_j l} = <k_j | l>.
    """

    config: SplitConfig
    blocks: tuple[numpy.ndarray, ...] = field(repr=False)
    l_max: int
    k_max: int

    @cached_property
    def tail_bound(self) -> float:
        """Largest probability any unit state with l <= l_max can lose."""
        sigma = numpy.linalg.svd(numpy.vstack(self.blocks), compute_uv=False)
        return float(max(1.0 - sigma[-1] ** 2, 0.0))

    def contract(self, coeffs) -> list[numpy.ndarray]:
        """Return the sub-well amplitudes sum_l A_{k_j l} d_l for each well."""
        coeffs = numpy.asarray(coeffs, dtype=complex).ravel()
        if coeffs.size > self.l_max:
            raise DomainError(
                f"State carries {coeffs.size} modes but l_max is {self.l_max}."
            )
        return [block[:, : coeffs.size] @ coeffs for block in self.blocks]


def basis_change(
    cfg: SplitConfig, l_max: int = DEFAULT_CAPS[0], k_max: int = DEFAULT_CAPS[1]
) -> BasisChangeMatrix:
    """Assemble the closed-form change-of-basis matrices of a split."""
    if l_max < 1 or k_max < 1:
        raise DomainError(f"Mode caps must be positive, got ({l_max}, {k_max}).")
    blocks = tuple(
        _overlap_block(seg, cfg.length, l_max, k_max) for seg in cfg.segments
    )
    return BasisChangeMatrix(cfg, blocks, l_max, k_max)


@dataclass(frozen=True)
class SpectrumLine:
    """Energy E_j(k) of mode k of sub-well j; equal energies share a rank."""

    j: int
    k: int
    energy: float
    rank: int


def interference_spectrum(cfg: SplitConfig, k_max: int) -> list[SpectrumLine]:
    """Return the union of the sub-well spectra sorted by energy."""
    if k_max < 1:
        raise DomainError(f"k_max must be positive, got {k_max}.")
    entries = sorted(
        (Units.PI2 * k**2 / seg.width**2, j, k)
        for j, seg in enumerate(cfg.segments, start=1)
        for k in range(1, k_max + 1)
    )
    lines = []
    rank = 0
    previous = None
    for energy, j, k in entries:
        if previous is None or energy - previous > TIE_TOL * previous:
            rank += 1
            previous = energy
        lines.append(SpectrumLine(j, k, energy, rank))
    return lines


@dataclass(frozen=True)
class OutcomeRow:
    """Probability of finding the particle in mode k of sub-well j."""

    j: int
    k: int
    energy: float
    probability: float


@dataclass(frozen=True)
class OutcomeTable:
    """Outcome probabilities P(k_j) of a split, sorted by energy."""

    rows: tuple[OutcomeRow, ...]
    marginals: tuple[float, ...]
    tail: float
    tail_bound: float
    diagnostics: tuple[str, ...] = ()

    def __iter__(self):
        return iter(self.rows)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def total(self) -> float:
        """Probability carried by the table."""
        return float(sum(row.probability for row in self.rows))

    def probability(self, j: int, k: int) -> float:
        """Return P(k_j) for one outcome."""
        for row in self.rows:
            if row.j == j and row.k == k:
                return row.probability
        raise DomainError(f"Outcome ({j}, {k}) is not in the table.")


def outcome_probabilities(
    state: WellState,
    cfg: SplitConfig,
    caps: tuple[int, int] = DEFAULT_CAPS,
    t: float = 0.0,
) -> OutcomeTable:
    """
    Tabulate P(k_j) = |sum_l A_{k_j l} d_l|^2 for every sub-well mode.

    Parameters
    ----------
    state : WellState
        State in the unsplit well.
    cfg : SplitConfig
        Barrier positions.
    caps : tuple[int, int]
        (l_max, k_max) truncation of the change of basis.
    t : float
        Time of the split.

    Returns
    -------
    OutcomeTable
        Rows sorted by energy, the per-well marginals, the tail
        1 - sum P(k_j) and the declared tail bound of the basis change.
    """
    _check_geometry(state, cfg)
    l_max, k_max = caps
    diagnostics = [
        f"barrier at {chi} is not at a zero"
        for chi in _check_zeros(state, cfg, t, ZERO_TOL)
    ]
    matrix = basis_change(cfg, max(l_max, state.n_modes), k_max)
    amplitudes = matrix.contract(state.coefficients_at(t))
    rows = []
    marginals = []
    for j, (seg, amps) in enumerate(zip(cfg.segments, amplitudes), start=1):
        probs = numpy.abs(amps) ** 2
        marginals.append(float(probs.sum()))
        rows.extend(
            OutcomeRow(j, k, Units.PI2 * k**2 / seg.width**2, float(p))
            for k, p in enumerate(probs, start=1)
        )
    rows.sort(key=lambda row: (row.energy, row.j, row.k))
    tail = 1.0 - sum(marginals)
    if tail > TAIL_BUDGET:
        message = f"truncation tail {tail:.3e} exceeds {TAIL_BUDGET:.0e}"
        LOGGER.warning(f"Outcome table {message}.")
        diagnostics.append(message)
    return OutcomeTable(
        tuple(rows), tuple(marginals), tail, matrix.tail_bound, tuple(diagnostics)
    )


@dataclass(frozen=True, eq=False)
class TruncatedState:
    """The renormalised restriction of a state to one sub-well."""

    state: WellState
    segment: WellSegment
    weight: float
    t: float = 0.0

    def __call__(self, x):
        x = numpy.asarray(x, dtype=float)
        values = self.state.evaluate(x, self.t) / math.sqrt(self.weight)
        return numpy.where(self.segment.contains(x), values, 0.0)[()]

    def derivative(self, x):
        """Spatial derivative inside the sub-well."""
        x = numpy.asarray(x, dtype=float)
        values = self.state.evaluate_derivative(x, self.t) / math.sqrt(self.weight)
        return numpy.where(self.segment.contains(x), values, 0.0)[()]

    def kinetic_energy(self, order: int = 32, panels: int = 64) -> float:
        """Mean energy integral of |phi'|^2 over the sub-well by quadrature."""
        integral = composite_gauss_legendre(
            lambda x: numpy.abs(self.derivative(x)) ** 2,
            self.segment.left,
            self.segment.right,
            order,
            panels,
        )
        return float(numpy.real(integral))


def truncated_state(
    state: WellState, cfg: SplitConfig, j: int, t: float = 0.0
) -> TruncatedState:
    """Restrict a state to sub-well j and renormalise it."""
    weight = split_probabilities(state, cfg, t)[j - 1]
    if weight <= 0.0:
        raise DomainError(f"Sub-well {j} carries no probability.")
    return TruncatedState(state, cfg.segment(j), float(weight), t)


@dataclass(frozen=True)
class EnergyCheck:
    """Comparison of <E> with the probability-weighted sub-well energies."""

    total: float
    split_sum: float
    per_well: tuple[tuple[float, float], ...]
    agrees: bool


def mean_energy_check(
    state: WellState, cfg: SplitConfig, tol: float = ENERGY_TOL
) -> EnergyCheck:
    """
    Check <E> = sum_j P_j <E_j> for a split at the reference time.

    The left side is the analytic mean energy; each <E_j> is obtained by
    Gauss-Legendre quadrature of the truncated, renormalised state.
    """
    total = mean_energy(state)
    per_well = []
    for j in range(1, cfg.n_wells + 1):
        piece = truncated_state(state, cfg, j, state.t0)
        per_well.append((piece.weight, piece.kinetic_energy()))
    split_sum = float(sum(p * e for p, e in per_well))
    agrees = abs(split_sum - total) <= tol * max(abs(total), 1.0)
    if not agrees:
        LOGGER.warning(
            f"Energy check failed: <E>={total:.10g}, sum P_j <E_j>={split_sum:.10g}."
        )
    return EnergyCheck(total, split_sum, tuple(per_well), agrees)


@dataclass(frozen=True)
class Carpet:
    """|Psi(x, t)|^2 on a grid, rows over t, with the norm of each row."""

    x: numpy.ndarray = field(repr=False)
    t: numpy.ndarray = field(repr=False)
    density: numpy.ndarray = field(repr=False)
    norms: numpy.ndarray = field(repr=False)
    defect: float


def carpet(
    state: WellState,
    cfg: SplitConfig,
    t_split: float,
    x_grid,
    t_grid,
    caps: tuple[int, int] = DEFAULT_CAPS,
) -> Carpet:
    """
    Evolve a state through an instantaneous split and sample |Psi|^2.

    Before ``t_split`` the state evolves in the unsplit well. At ``t_split``
    it is re-expanded in the sub-well modes and each sub-well then evolves
    independently with its own energies.

    Raises
    ------
    TruncationError
        If the re-expanded state keeps less than 0.999 of the norm.
    """
    _check_geometry(state, cfg)
    x = numpy.asarray(x_grid, dtype=float).ravel()
    t = numpy.asarray(t_grid, dtype=float).ravel()
    l_max, k_max = caps
    _check_zeros(state, cfg, t_split, ZERO_TOL)

    matrix = basis_change(cfg, max(l_max, state.n_modes), k_max)
    amplitudes = matrix.contract(state.coefficients_at(t_split))
    post_norm = float(sum(numpy.sum(numpy.abs(a) ** 2) for a in amplitudes))
    defect = 1.0 - post_norm
    if post_norm < MIN_POST_SPLIT_NORM:
        raise TruncationError(defect)

    before = t < t_split
    density = numpy.empty((t.size, x.size))
    norms = numpy.where(before, 1.0, post_norm)

    if numpy.any(before):
        modes = mode_matrix(state.segment, state.n_modes, x)
        phases = numpy.exp(-1j * numpy.outer(t[before] - state.t0, state.energies))
        density[before] = numpy.abs((phases * state.coeffs) @ modes) ** 2

    after = ~before
    if numpy.any(after):
        field_after = numpy.zeros((int(after.sum()), x.size), dtype=complex)
        ks = numpy.arange(1, k_max + 1)
        for seg, amps in zip(cfg.segments, amplitudes):
            energies = Units.PI2 * ks**2 / seg.width**2
            phases = numpy.exp(-1j * numpy.outer(t[after] - t_split, energies))
            field_after += (phases * amps) @ mode_matrix(seg, k_max, x)
        density[after] = numpy.abs(field_after) ** 2

    return Carpet(x, t, density, norms, defect)
