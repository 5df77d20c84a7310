"""Infinite square well geometry, eigenmodes and superposition states."""

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy

from aiida_wellsplit.exceptions import DomainError
from aiida_wellsplit.units import Units

NORM_TOLERANCE = 1e-12


@dataclass(frozen=True)
class WellSegment:
    """An interval [left, right] bounded by impenetrable walls."""

    left: float = 0.0
    right: float = Units.LENGTH

    def __post_init__(self):
        if not (math.isfinite(self.left) and math.isfinite(self.right)):
            raise DomainError("Well segment boundaries must be finite.")
        if self.left < 0.0 or self.right <= self.left:
            raise DomainError(
                f"Invalid well segment [{self.left}, {self.right}]: "
                "require 0 <= left < right."
            )

    @property
    def width(self) -> float:
        """Width D of the segment."""
        return self.right - self.left

    def contains(self, x) -> numpy.ndarray:
        """Return a boolean mask of the positions lying inside the segment."""
        x = numpy.asarray(x, dtype=float)
        return (x >= self.left) & (x <= self.right)


def _check_mode(l: int) -> None:
    if int(l) != l or l < 1:
        raise DomainError(f"Mode index must be a positive integer, got {l}.")


def eigenenergy(seg: WellSegment, l: int) -> float:
    """Return the energy pi^2 l^2 / D^2 of mode l of a segment."""
    _check_mode(l)
    return Units.PI2 * l**2 / seg.width**2


def eigenfunction_value(seg: WellSegment, l: int, x):
    """
    Evaluate the normalised eigenmode l of a segment.

    Parameters
    ----------
    seg : WellSegment
        The well segment.
    l : int
        Mode index, starting at 1.
    x : float | array_like
        Position(s). Positions outside the segment evaluate to zero.

    Returns
    -------
    float | numpy.ndarray
        sqrt(2/D) sin(l pi (x - left) / D) inside the segment, 0 outside.
    """
    _check_mode(l)
    values = mode_matrix(seg, l, x)[l - 1]
    return values.reshape(numpy.shape(x))[()]


def mode_matrix(seg: WellSegment, n_modes: int, x) -> numpy.ndarray:
    """Return the values of modes 1..n_modes at x as an (n_modes, len(x)) array."""
    x = numpy.atleast_1d(numpy.asarray(x, dtype=float)).ravel()
    ls = numpy.arange(1, n_modes + 1)[:, None]
    phase = ls * numpy.pi * (x[None, :] - seg.left) / seg.width
    values = math.sqrt(2.0 / seg.width) * numpy.sin(phase)
    return numpy.where(seg.contains(x)[None, :], values, 0.0)


def mode_derivative_matrix(seg: WellSegment, n_modes: int, x) -> numpy.ndarray:
    """Return the spatial derivatives of modes 1..n_modes at x."""
    x = numpy.atleast_1d(numpy.asarray(x, dtype=float)).ravel()
    ls = numpy.arange(1, n_modes + 1)[:, None]
    k = ls * numpy.pi / seg.width
    values = math.sqrt(2.0 / seg.width) * k * numpy.cos(k * (x[None, :] - seg.left))
    return numpy.where(seg.contains(x)[None, :], values, 0.0)


def mode_overlap_matrix(
    seg: WellSegment, n_modes: int, a: float, b: float
) -> numpy.ndarray:
    """
    Return the overlap integrals of modes 1..n_modes over [a, b].

    Entry (l, l') is the closed-form integral of psi_l psi_l' between a and b,
    with the limits clipped to the segment.
    """
    lo = min(max(a, seg.left), seg.right) - seg.left
    hi = min(max(b, seg.left), seg.right) - seg.left
    theta = numpy.pi / seg.width
    ls = numpy.arange(1, n_modes + 1)
    diff = ls[:, None] - ls[None, :]
    total = ls[:, None] + ls[None, :]
    safe = numpy.where(diff == 0, 1, diff)

    def antiderivative(y: float) -> numpy.ndarray:
        cross = numpy.where(diff == 0, y, numpy.sin(diff * theta * y) / (safe * theta))
        return (cross - numpy.sin(total * theta * y) / (total * theta)) / seg.width

    return antiderivative(hi) - antiderivative(lo)


@dataclass(frozen=True, eq=False)
class WellState:
    """
    A finite superposition of the eigenmodes of a well segment.

    ``coeffs[l - 1]`` is the amplitude d_l at the reference time ``t0``. The
    coefficients must be normalised and the trailing coefficient nonzero; use
    :meth:`from_coefficients` to normalise and trim raw amplitudes.
    """

    segment: WellSegment
    coeffs: numpy.ndarray = field(repr=False)
    t0: float = 0.0

    def __post_init__(self):
        coeffs = numpy.array(self.coeffs, dtype=complex).ravel()
        if coeffs.size == 0:
            raise DomainError("A well state needs at least one coefficient.")
        if coeffs[-1] == 0:
            raise DomainError(
                "The trailing coefficient of a well state must be nonzero."
            )
        norm = float(numpy.sum(numpy.abs(coeffs) ** 2))
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise DomainError(f"Well state is not normalised (sum |d_l|^2 = {norm!r}).")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_coefficients(
        cls, coeffs, segment: WellSegment | None = None, t0: float = 0.0
    ) -> "WellState":
        """Build a state from raw amplitudes, trimming zeros and normalising."""
        coeffs = numpy.array(coeffs, dtype=complex).ravel()
        nonzero = numpy.flatnonzero(coeffs)
        if nonzero.size == 0:
            raise DomainError("Cannot normalise an all-zero coefficient vector.")
        coeffs = coeffs[: nonzero[-1] + 1]
        coeffs = coeffs / numpy.linalg.norm(coeffs)
        return cls(segment or WellSegment(), coeffs, t0)

    @classmethod
    def eigenstate(cls, l: int, segment: WellSegment | None = None) -> "WellState":
        """Return the pure eigenmode l."""
        _check_mode(l)
        coeffs = numpy.zeros(l, dtype=complex)
        coeffs[-1] = 1.0
        return cls(segment or WellSegment(), coeffs)

    @property
    def n_modes(self) -> int:
        """Highest mode index carried by the state."""
        return self.coeffs.size

    @property
    def modes(self) -> numpy.ndarray:
        """Mode indices 1..n_modes."""
        return numpy.arange(1, self.n_modes + 1)

    @property
    def energies(self) -> numpy.ndarray:
        """Eigenenergies of the carried modes."""
        return Units.PI2 * self.modes**2 / self.segment.width**2

    @property
    def populated(self) -> numpy.ndarray:
        """Indices l with nonzero amplitude."""
        return self.modes[self.coeffs != 0]

    def coefficients_at(self, t: float) -> numpy.ndarray:
        """Return the phased amplitudes d_l exp(-i E_l (t - t0))."""
        return self.coeffs * numpy.exp(-1j * self.energies * (t - self.t0))

    def at(self, t: float) -> "WellState":
        """Return the same state with its reference time moved to t."""
        coeffs = self.coefficients_at(t)
        coeffs = coeffs / numpy.linalg.norm(coeffs)
        return WellState(self.segment, coeffs, t)

    def evaluate(self, x, t: float | None = None):
        """Evaluate Psi(x, t); t defaults to the reference time."""
        t = self.t0 if t is None else t
        values = self.coefficients_at(t) @ mode_matrix(self.segment, self.n_modes, x)
        return values.reshape(numpy.shape(x))[()]

    def evaluate_derivative(self, x, t: float | None = None):
        """Evaluate the spatial derivative of Psi(x, t)."""
        t = self.t0 if t is None else t
        matrix = mode_derivative_matrix(self.segment, self.n_modes, x)
        values = self.coefficients_at(t) @ matrix
        return values.reshape(numpy.shape(x))[()]


def evaluate(state: WellState, x, t: float):
    """Evaluate sum_l d_l psi_l(x) exp(-i E_l (t - t0))."""
    return state.evaluate(x, t)


def mean_energy(state: WellState) -> float:
    """Return the analytic mean energy sum_l |d_l|^2 E(l)."""
    return float(numpy.sum(numpy.abs(state.coeffs) ** 2 * state.energies))


def make_alpha_state(
    x0: float, length: float = Units.LENGTH, mirrored: bool = False
) -> WellState:
    """
    Build the two-mode state with a zero at x0.

    The coefficients are (alpha, -1) / sqrt(alpha^2 + 1) on modes 1 and 2 with
    alpha = 2 cos(pi x0 / L), so that Psi(x0, 0) = 0.

    Parameters
    ----------
    x0 : float
        Position of the zero, 0 < x0 < L/2.
    length : float
        Well length L.
    mirrored : bool
        Return the reflected state, coefficients (alpha, +1), whose zero sits
        at L - x0 instead.

    Returns
    -------
    WellState
        The normalised superposition.
    """
    if not 0.0 < x0 < 0.5 * length:
        raise DomainError(f"The zero position must lie in (0, L/2), got {x0}.")
    alpha = 2.0 * math.cos(math.pi * x0 / length)
    sign = 1.0 if mirrored else -1.0
    coeffs = numpy.array([alpha, sign]) / math.sqrt(alpha**2 + 1.0)
    return WellState(WellSegment(0.0, length), coeffs)


def revival_period(state: WellState) -> float | None:
    """Return the time after which |Psi|^2 repeats, or None for a single mode."""
    ls = state.populated
    if ls.size < 2:
        return None
    gaps = [int(l * l - ls[0] * ls[0]) for l in ls[1:]]
    g = reduce(math.gcd, gaps)
    return 2.0 * state.segment.width**2 / (math.pi * g)
