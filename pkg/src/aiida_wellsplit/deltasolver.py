"""Eigenlevels of the infinite square well with a delta barrier."""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy
from scipy import linalg, optimize

from aiida_wellsplit.exceptions import DomainError, SpectrumError
from aiida_wellsplit.units import Units
from aiida_wellsplit.utils import LOGGER, LevelClass

LOGGER = LOGGER.getChild("deltasolver")

PANEL_OFFSET = 1e-13
MIN_OFFSET = 4e-16
NODE_TOL = 1e-12
DEGENERACY_TOL = 1e-9
MAX_DENOMINATOR = 10**6


@dataclass(frozen=True)
class PiecewiseSine:
    """
    A sin(k x) on [0, x0] joined to B sin(k (L - x)) on [x0, L].

    This is the shape of every eigenfunction of the well with a point
    barrier at x0.
    """

    k: float
    x0: float
    length: float
    left_amp: float
    right_amp: float

    def evaluate(self, x):
        """Evaluate the piecewise function."""
        x = numpy.asarray(x, dtype=float)
        left = self.left_amp * numpy.sin(self.k * x)
        right = self.right_amp * numpy.sin(self.k * (self.length - x))
        inside = (x >= 0.0) & (x <= self.length)
        values = numpy.where(x <= self.x0, left, right)
        return numpy.where(inside, values, 0.0)[()]

    def derivative(self, x):
        """Evaluate the derivative, taking the left branch at x0."""
        x = numpy.asarray(x, dtype=float)
        left = self.left_amp * self.k * numpy.cos(self.k * x)
        right = -self.right_amp * self.k * numpy.cos(self.k * (self.length - x))
        return numpy.where(x <= self.x0, left, right)[()]

    @property
    def left_weight(self) -> float:
        """Probability on [0, x0]."""
        a = self.x0
        return self.left_amp**2 * (a / 2 - math.sin(2 * self.k * a) / (4 * self.k))

    @property
    def right_weight(self) -> float:
        """Probability on [x0, L]."""
        b = self.length - self.x0
        return self.right_amp**2 * (b / 2 - math.sin(2 * self.k * b) / (4 * self.k))

    def mismatch(self) -> float:
        """Return the continuity defect at x0."""
        b = self.length - self.x0
        return abs(
            self.left_amp * math.sin(self.k * self.x0)
            - self.right_amp * math.sin(self.k * b)
        )

    def jump(self) -> float:
        """Return psi'(x0+) - psi'(x0-)."""
        b = self.length - self.x0
        return -self.k * (
            self.right_amp * math.cos(self.k * b)
            + self.left_amp * math.cos(self.k * self.x0)
        )


@dataclass(frozen=True)
class DeltaLevel:
    """One eigenlevel of the well with a delta barrier."""

    index: int
    k: float
    kind: LevelClass
    left_amp: float
    right_amp: float
    p_left: float
    p_right: float
    degenerate: bool = False

    @property
    def energy(self) -> float:
        """E = k^2."""
        return self.k**2


@dataclass(frozen=True)
class DeltaWellSpectrum:
    """The lowest levels of the well for one barrier position and strength."""

    x0: float
    V: float
    length: float
    levels: tuple[DeltaLevel, ...]

    def __iter__(self):
        return iter(self.levels)

    def __len__(self) -> int:
        return len(self.levels)

    @property
    def energies(self) -> numpy.ndarray:
        """Level energies in ascending order."""
        return numpy.array([level.energy for level in self.levels])

    def level(self, index: int) -> DeltaLevel:
        """Return the level with the given 1-based index."""
        if not 1 <= index <= len(self.levels):
            raise DomainError(f"Level {index} outside 1..{len(self.levels)}.")
        return self.levels[index - 1]


def _check_barrier(x0: float, length: float) -> None:
    if not 0.0 < x0 < length:
        raise DomainError(f"Barrier position must lie in (0, {length}), got {x0}.")


def _is_node(k: float, x0: float) -> bool:
    return abs(math.sin(k * x0)) < NODE_TOL


def _poles(x0: float, length: float, k_cap: float) -> list[tuple[float, bool]]:
    """Poles of cot(k a) and cot(k b) up to k_cap, flagging coincident ones."""
    a, b = x0, length - x0
    raw = [n * math.pi / a for n in range(1, int(k_cap * a / math.pi) + 2)]
    raw += [m * math.pi / b for m in range(1, int(k_cap * b / math.pi) + 2)]
    raw.sort()
    poles: list[tuple[float, bool]] = []
    for pole in raw:
        if poles and pole - poles[-1][0] <= 1e-12 * pole:
            poles[-1] = (poles[-1][0], True)
            continue
        poles.append((pole, False))
    # a persistent level is a common node of both sub-well mode families
    return [(p, c or _is_node(p, a) and _is_node(p, b)) for p, c in poles]


def _generic_level(k: float, x0: float, length: float) -> tuple[float, float]:
    a, b = x0, length - x0
    left, right = math.sin(k * b), math.sin(k * a)
    weight = left**2 * (a / 2 - math.sin(2 * k * a) / (4 * k)) + right**2 * (
        b / 2 - math.sin(2 * k * b) / (4 * k)
    )
    scale = math.copysign(1.0 / math.sqrt(weight), left if left != 0 else right)
    return left * scale, right * scale


def _node_level(k: float, x0: float, length: float) -> tuple[float, float]:
    a, b = x0, length - x0
    right = -math.cos(k * a) / math.cos(k * b)
    weight = (a / 2 - math.sin(2 * k * a) / (4 * k)) + right**2 * (
        b / 2 - math.sin(2 * k * b) / (4 * k)
    )
    return 1.0 / math.sqrt(weight), right / math.sqrt(weight)


def _panel_top(oriented, pole: float, shared: bool) -> float | None:
    """
    Upper end of a bracketing panel below ``pole``.

    A simple pole is a valid end point of the pole-free function. At a shared
    pole the function vanishes, so the end is pulled back until the sign is
    negative; None means the root lies within rounding of the pole.
    """
    if not shared:
        return pole
    for offset in (PANEL_OFFSET, 1e-14, 1e-15, MIN_OFFSET):
        k = pole * (1.0 - offset)
        if oriented(k) < 0.0:
            return k
    return None


def delta_spectrum(
    x0: float, V: float, count: int = 10, length: float = Units.LENGTH
) -> DeltaWellSpectrum:
    """
    Solve for the lowest ``count`` levels of the well with a delta barrier.

    Eigenfunctions are continuous at x0 with psi'(x0+) - psi'(x0-) =
    V psi(x0). For psi(x0) != 0 this gives the matching condition
    k [cot(k a) + cot(k b)] + V = 0 with a = x0 and b = L - x0, whose left
    side decreases strictly between consecutive poles of the two cotangents,
    so each panel holds exactly one root. The roots are bracketed on the
    condition multiplied by sin(k a) sin(k b), which stays finite at the
    poles, so strong barriers whose roots crowd the poles still bracket.
    Levels with a node at x0 sit at coincident poles k = l pi / L and do not
    depend on V.

    Parameters
    ----------
    x0 : float
        Barrier position, 0 < x0 < L.
    V : float
        Barrier strength, V >= 0.
    count : int
        Number of levels to return.
    length : float
        Well length L.

    Returns
    -------
    DeltaWellSpectrum
        Levels ordered by k, node levels last within a tie.

    Raises
    ------
    SpectrumError
        If a panel fails to bracket its root or the level count below a pole
        disagrees with the unperturbed well.
    """
    _check_barrier(x0, length)
    if V < 0.0 or not math.isfinite(V):
        raise DomainError(f"Barrier strength must be finite and >= 0, got {V}.")
    if count < 1:
        raise DomainError(f"count must be positive, got {count}.")
    a, b = x0, length - x0

    def cleared(k: float) -> float:
        # matching condition times sin(k a) sin(k b): no poles, same roots
        return k * math.sin(k * length) + V * math.sin(k * a) * math.sin(k * b)

    k_cap = (count + 1) * math.pi / length + math.pi / min(a, b)
    poles = _poles(x0, length, k_cap)
    found: list[tuple[float, LevelClass]] = []
    lower, lower_shared = 0.0, False
    for pole, persistent in poles:
        mid = 0.5 * (lower + pole)
        sign = math.copysign(1.0, math.sin(mid * a) * math.sin(mid * b))

        def oriented(k: float, sign: float = sign) -> float:
            return sign * cleared(k)

        if lower == 0.0:
            lo = PANEL_OFFSET * pole
        else:
            lo = lower * (1.0 + PANEL_OFFSET) if lower_shared else lower
        hi = _panel_top(oriented, pole, persistent)
        if hi is None:
            root = pole * (1.0 - MIN_OFFSET)
            LOGGER.debug(f"Level below k={pole:.6g} within rounding of the pole.")
        else:
            try:
                root = optimize.brentq(oriented, lo, hi, xtol=1e-15, rtol=1e-15)
            except ValueError as exc:
                raise SpectrumError(
                    f"No sign change of the matching function on ({lo}, {hi}) "
                    f"for x0={x0}, V={V}."
                ) from exc
        # roots of strong barriers can round onto the pole itself
        found.append((min(root, math.nextafter(pole, 0.0)), LevelClass.GENERIC))
        if persistent:
            found.append((pole, LevelClass.PERSISTENT_NODE))
        lower, lower_shared = pole, persistent

    found.sort(key=lambda item: (item[0], item[1] is LevelClass.PERSISTENT_NODE))
    for pole, _ in poles:
        below = sum(1 for k, _ in found if k < pole)
        expected = math.ceil(pole * length / math.pi - 1e-9) - 1
        if below != expected:
            raise SpectrumError(
                f"Found {below} levels below k={pole:.6g}, expected {expected}."
            )

    levels = []
    for index, (k, kind) in enumerate(found[:count], start=1):
        if kind is LevelClass.GENERIC:
            left, right = _generic_level(k, x0, length)
        else:
            left, right = _node_level(k, x0, length)
        shape = PiecewiseSine(k, x0, length, left, right)
        levels.append(
            DeltaLevel(
                index=index,
                k=k,
                kind=kind,
                left_amp=left,
                right_amp=right,
                p_left=shape.left_weight,
                p_right=shape.right_weight,
            )
        )
    for i in range(len(levels) - 1):
        e1, e2 = levels[i].energy, levels[i + 1].energy
        if e2 - e1 < DEGENERACY_TOL * e2:
            levels[i] = _flag(levels[i])
            levels[i + 1] = _flag(levels[i + 1])
    LOGGER.debug(f"Solved {len(levels)} levels for x0={x0}, V={V}.")
    return DeltaWellSpectrum(x0, float(V), length, tuple(levels))


def _flag(level: DeltaLevel) -> DeltaLevel:
    return DeltaLevel(
        level.index,
        level.k,
        level.kind,
        level.left_amp,
        level.right_amp,
        level.p_left,
        level.p_right,
        degenerate=True,
    )


@dataclass(frozen=True)
class DeltaEigenfunction:
    """A normalised eigenfunction with its jump-condition residual."""

    shape: PiecewiseSine
    V: float

    def evaluate(self, x):
        """Evaluate psi(x)."""
        return self.shape.evaluate(x)

    @property
    def p_left(self) -> float:
        """Probability on the left of the barrier."""
        return self.shape.left_weight

    @property
    def p_right(self) -> float:
        """Probability on the right of the barrier."""
        return self.shape.right_weight

    @property
    def jump_residual(self) -> float:
        """|psi'(x0+) - psi'(x0-) - V psi(x0)| relative to k |psi|_max scale."""
        shape = self.shape
        value = shape.left_amp * math.sin(shape.k * shape.x0)
        scale = shape.k * max(abs(shape.left_amp), abs(shape.right_amp))
        return abs(shape.jump() - self.V * value) / max(scale, 1.0)


def delta_eigenfunction(spectrum: DeltaWellSpectrum, level: int) -> DeltaEigenfunction:
    """Return the piecewise eigenfunction of one level of a spectrum."""
    item = spectrum.level(level)
    shape = PiecewiseSine(
        item.k, spectrum.x0, spectrum.length, item.left_amp, item.right_amp
    )
    return DeltaEigenfunction(shape, spectrum.V)


def delta_sweep(
    x0: float, v_grid, count: int = 10, length: float = Units.LENGTH
) -> list[DeltaWellSpectrum]:
    """Solve the spectrum for every barrier strength of a grid."""
    return [delta_spectrum(x0, float(v), count, length) for v in v_grid]


@dataclass(frozen=True)
class LimitSuperposition:
    """A state c1 * first + c2 * second built from two piecewise sines."""

    first: PiecewiseSine
    second: PiecewiseSine
    c1: float
    c2: float

    def evaluate(self, x):
        """Evaluate the superposition."""
        return self.c1 * self.first.evaluate(x) + self.c2 * self.second.evaluate(x)


@dataclass(frozen=True)
class DegeneratePair:
    """
    The sub-well eigenstates confined by an infinite barrier at a degeneracy.

    ``left_state`` and ``right_state`` are the n-th left-well and m-th
    right-well modes written as superpositions of the large-V limit of level
    l - 1 and the V-independent level l.
    """

    x0: float
    length: float
    n: int
    m: int
    l: int
    k: float
    limit: PiecewiseSine
    node: PiecewiseSine
    A: float
    B: float
    C: float
    left_state: LimitSuperposition
    right_state: LimitSuperposition

    @property
    def levels(self) -> tuple[int, int]:
        """The paired original-well levels (l - 1, l)."""
        return self.l - 1, self.l


def degenerate_limit_pair(
    x0: float, s: int = 1, length: float = Units.LENGTH
) -> DegeneratePair:
    """
    Build the confined pair at the s-th threefold degeneracy E0(l) = E1(n) = E2(m).

    Writing x0 / L = p / q in lowest terms, the degeneracy occurs for
    l = q s, n = p s and m = (q - p) s at k* = l pi / L. As V grows, level
    l - 1 tends to A sin(k* x) on the left and A (-1)^l (a / b) sin(k* (L - x))
    on the right, with A = sqrt(2 b / (a L)) fixed by normalisation, while
    level l is the unperturbed mode psi_l. The left-confined state is
    B (limit + A (a/b) sqrt(L/2) psi_l) and the right-confined state is
    C (limit - A sqrt(L/2) psi_l).

    Raises
    ------
    DomainError
        If x0 / L is not a ratio p / q with q <= 10^6, or s < 1.
    """
    _check_barrier(x0, length)
    if int(s) != s or s < 1:
        raise DomainError(f"Degeneracy order s must be a positive integer, got {s}.")
    ratio = Fraction(x0 / length).limit_denominator(MAX_DENOMINATOR)
    if abs(float(ratio) - x0 / length) > 1e-12:
        raise DomainError(
            f"No degeneracy E0(l) = E1(n) = E2(m): x0/L = {x0 / length!r} is not "
            f"a ratio of integers with denominator <= {MAX_DENOMINATOR}."
        )
    p, q = ratio.numerator, ratio.denominator
    n, m, l = p * s, (q - p) * s, q * s
    a, b = x0, length - x0
    k = l * math.pi / length
    sign = -1.0 if l % 2 else 1.0

    A = math.sqrt(2.0 * b / (a * length))
    limit = PiecewiseSine(k, x0, length, A, A * sign * a / b)
    node = PiecewiseSine(
        k, x0, length, math.sqrt(2.0 / length), -sign * math.sqrt(2.0 / length)
    )
    B = math.sqrt(b / length)
    C = math.sqrt(a / length)
    half = math.sqrt(length / 2.0)
    left_state = LimitSuperposition(limit, node, B, B * A * (a / b) * half)
    right_state = LimitSuperposition(limit, node, C, -C * A * half)
    return DegeneratePair(
        x0, length, n, m, l, k, limit, node, A, B, C, left_state, right_state
    )


def finite_difference_levels(
    x0: float,
    V: float,
    n_levels: int = 10,
    n_mesh: int = 20000,
    length: float = Units.LENGTH,
) -> numpy.ndarray:
    """
    Return the lowest energies from a second-order finite-difference Hamiltonian.

    The barrier is a one-cell top hat of height V / dx at the node nearest x0,
    so its integral is V.
    """
    _check_barrier(x0, length)
    h = length / n_mesh
    diagonal = numpy.full(n_mesh - 1, 2.0 / h**2)
    diagonal[int(round(x0 / h)) - 1] += V / h
    off = numpy.full(n_mesh - 2, -1.0 / h**2)
    return linalg.eigh_tridiagonal(
        diagonal,
        off,
        eigvals_only=True,
        select="i",
        select_range=(0, n_levels - 1),
    )
