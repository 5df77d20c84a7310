"""Location of stationary and transient zeros of well superposition states."""

import math
from dataclasses import dataclass

import numpy
from scipy import optimize

from aiida_wellsplit.exceptions import DomainError
from aiida_wellsplit.utils import LOGGER, ZeroKind
from aiida_wellsplit.wellcore import WellState, mode_derivative_matrix, mode_matrix

LOGGER = LOGGER.getChild("zerofinder")

DEFAULT_TOL = 1e-10
EDGE_MARGIN = 1e-9
NODE_TOL = 1e-10
MIN_GRID = 64


@dataclass(frozen=True)
class ZeroEvent:
    """A point (x, t) where the wavefunction vanishes."""

    x: float
    t: float
    kind: ZeroKind
    residual: float
    flat: bool = False


@dataclass(frozen=True)
class ZeroScan:
    """Zero events found by a scan, with the count of rejected candidates."""

    events: tuple[ZeroEvent, ...]
    dropped: int = 0

    def __iter__(self):
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)

    def __getitem__(self, index):
        return self.events[index]


def is_stationary_node(state: WellState, x: float) -> bool:
    """Return True if x is a node of every populated mode of the state."""
    seg = state.segment
    y = (x - seg.left) / seg.width
    return all(abs(math.sin(l * math.pi * y)) < NODE_TOL for l in state.populated)


def _inside(state: WellState, x: float) -> bool:
    seg = state.segment
    return seg.left + EDGE_MARGIN < x < seg.right - EDGE_MARGIN


def _merge(events: list[ZeroEvent], spacing: float) -> list[ZeroEvent]:
    """Drop duplicates closer than a fraction of the grid spacing, keep the best."""
    merged: list[ZeroEvent] = []
    for event in sorted(events, key=lambda e: (e.t, e.x)):
        if merged:
            last = merged[-1]
            if abs(event.t - last.t) < 1e-12 and abs(event.x - last.x) < spacing:
                if event.residual < last.residual:
                    merged[-1] = event
                continue
        merged.append(event)
    return merged


def zeros_at_time(
    state: WellState, t: float, grid_n: int = 1024, tol: float = DEFAULT_TOL
) -> ZeroScan:
    """
    Find all interior zeros of Psi(., t).

    A global phase is factored out so that the wavefunction is as close to
    real as possible; sign changes of the real part are refined by Brent
    bracketing plus a Newton polish, and small local minima of |Psi| are
    refined by bounded minimisation (flat and multiple zeros).

    Parameters
    ----------
    state : WellState
        The superposition state.
    t : float
        Time of the slice.
    grid_n : int
        Number of scan points; raised to 16 points per carried mode.
    tol : float
        Maximum |Psi| accepted at a reported zero.

    Returns
    -------
    ZeroScan
        The events sorted by position and the number of dropped candidates.
    """
    if grid_n < MIN_GRID:
        raise DomainError(f"grid_n must be at least {MIN_GRID}, got {grid_n}.")
    seg = state.segment
    n_modes = state.n_modes
    grid_n = max(grid_n, 16 * n_modes)
    spacing = seg.width / grid_n
    xs = seg.left + (numpy.arange(grid_n) + 0.5) * spacing

    coeffs = state.coefficients_at(t)
    values = coeffs @ mode_matrix(seg, n_modes, xs)
    theta = 0.5 * numpy.angle(numpy.sum(values**2))
    rotated = coeffs * numpy.exp(-1j * theta)
    real_part = values.real * math.cos(theta) + values.imag * math.sin(theta)
    scale = float(numpy.max(numpy.abs(values)))

    def psi(x: float) -> complex:
        return complex(coeffs @ mode_matrix(seg, n_modes, x)[:, 0])

    def u(x: float) -> float:
        return float((rotated @ mode_matrix(seg, n_modes, x)[:, 0]).real)

    candidates: list[float] = []
    dropped = 0

    for i in numpy.flatnonzero(real_part[:-1] * real_part[1:] < 0):
        root = optimize.brentq(u, xs[i], xs[i + 1], xtol=1e-15, maxiter=200)
        slope = float((rotated @ _derivative_column(state, root)).real)
        if slope != 0.0:
            polished = root - u(root) / slope
            if xs[i] <= polished <= xs[i + 1] and abs(psi(polished)) < abs(psi(root)):
                root = polished
        candidates.append(root)

    candidates.extend(xs[real_part == 0.0].tolist())

    magnitude = numpy.abs(values)
    for i in range(1, grid_n - 1):
        if magnitude[i] > 1e-3 * scale:
            continue
        if magnitude[i] <= magnitude[i - 1] and magnitude[i] <= magnitude[i + 1]:
            result = optimize.minimize_scalar(
                lambda x: abs(psi(x)),
                bounds=(xs[i - 1], xs[i + 1]),
                method="bounded",
                options={"xatol": 1e-14},
            )
            candidates.append(float(result.x))

    events = []
    for x in candidates:
        residual = abs(psi(x))
        if residual >= tol or not _inside(state, x):
            dropped += 1
            continue
        slope = abs(complex(coeffs @ _derivative_column(state, x)))
        kind = (
            ZeroKind.STATIONARY
            if is_stationary_node(state, x)
            else ZeroKind.TRANSIENT
        )
        events.append(
            ZeroEvent(
                x=float(x),
                t=float(t),
                kind=kind,
                residual=residual,
                flat=slope < 1e-6 * scale / seg.width,
            )
        )

    merged = _merge(events, 0.5 * spacing)
    if dropped:
        LOGGER.debug(f"{dropped} zero candidates at t={t} failed refinement.")
    return ZeroScan(tuple(sorted(merged, key=lambda e: e.x)), dropped)


def _derivative_column(state: WellState, x: float) -> numpy.ndarray:
    return mode_derivative_matrix(state.segment, state.n_modes, x)[:, 0]


def stationary_nodes(state: WellState) -> list[float]:
    """Return the interior positions that are nodes of every populated mode."""
    seg = state.segment
    first = int(state.populated[0])
    nodes = [seg.left + seg.width * j / first for j in range(1, first)]
    return [x for x in nodes if is_stationary_node(state, x)]


def zero_events(
    state: WellState,
    t_window: tuple[float, float],
    grid: tuple[int, int] = (1024, 512),
    tol: float = DEFAULT_TOL,
) -> ZeroScan:
    """
    Find the zero events of a state within a time window.

    Stationary nodes are reported once, at the start of the window. Two-mode
    states use the analytic phase condition: the ratio of the two phased
    amplitudes is real at t = t0 + (arg(d2/d1) - k pi) / (E2 - E1), and the
    spatial zeros at those times are found with :func:`zeros_at_time`. States
    with three or more populated modes are scanned on an (n_x, n_t) grid for
    cells where both Re Psi and Im Psi change sign, refined in (x, t) with a
    2-D root solve.

    Parameters
    ----------
    state : WellState
        The superposition state.
    t_window : tuple[float, float]
        Closed window [t_a, t_b].
    grid : tuple[int, int]
        Spatial and temporal grid sizes.
    tol : float
        Maximum |Psi| accepted at a reported zero.

    Returns
    -------
    ZeroScan
        Events sorted by (t, x), one per occurrence.
    """
    t_a, t_b = (float(v) for v in t_window)
    if t_b <= t_a:
        raise DomainError(f"Empty time window [{t_a}, {t_b}].")
    n_x, n_t = grid
    seg = state.segment

    events = [
        ZeroEvent(
            x=x,
            t=t_a,
            kind=ZeroKind.STATIONARY,
            residual=abs(state.evaluate(x, t_a)),
        )
        for x in stationary_nodes(state)
    ]
    dropped = 0
    populated = state.populated

    if populated.size == 2:
        l1, l2 = (int(l) for l in populated)
        d1, d2 = state.coeffs[l1 - 1], state.coeffs[l2 - 1]
        gap = state.energies[l2 - 1] - state.energies[l1 - 1]
        phase = float(numpy.angle(d2 / d1))
        slack = 1e-9
        k_first = math.floor((phase - gap * (t_a - state.t0)) / math.pi + slack)
        k_last = math.ceil((phase - gap * (t_b - state.t0)) / math.pi - slack)
        for k in range(k_first, k_last - 1, -1):
            t = state.t0 + (phase - k * math.pi) / gap
            t = min(max(t, t_a), t_b)
            scan = zeros_at_time(state, t, n_x, tol)
            dropped += scan.dropped
            events.extend(e for e in scan if e.kind is ZeroKind.TRANSIENT)
    elif populated.size > 2:
        found, failed = _grid_events(state, t_a, t_b, n_x, n_t, tol)
        events.extend(found)
        dropped += failed

    merged = _merge(events, 0.5 * seg.width / max(n_x, MIN_GRID))
    return ZeroScan(tuple(merged), dropped)


def _straddles(values: numpy.ndarray) -> numpy.ndarray:
    corners = numpy.stack(
        [values[:-1, :-1], values[1:, :-1], values[:-1, 1:], values[1:, 1:]]
    )
    return (corners.min(axis=0) <= 0.0) & (corners.max(axis=0) >= 0.0)


def _merge_space_time(
    events: list[ZeroEvent], dx: float, dt: float
) -> list[ZeroEvent]:
    """Merge refined roots that landed on the same zero from neighbouring cells."""
    kept: list[ZeroEvent] = []
    for event in sorted(events, key=lambda e: (e.t, e.x)):
        for i, other in enumerate(kept):
            if abs(event.x - other.x) < dx and abs(event.t - other.t) < dt:
                if event.residual < other.residual:
                    kept[i] = event
                break
        else:
            kept.append(event)
    return kept


def _grid_events(
    state: WellState, t_a: float, t_b: float, n_x: int, n_t: int, tol: float
) -> tuple[list[ZeroEvent], int]:
    """Scan a space-time grid for simultaneous sign changes of Re and Im."""
    seg = state.segment
    xs = seg.left + (numpy.arange(n_x) + 0.5) * seg.width / n_x
    ts = numpy.linspace(t_a, t_b, n_t)
    phases = numpy.exp(-1j * numpy.outer(ts - state.t0, state.energies))
    field = (phases * state.coeffs) @ mode_matrix(seg, state.n_modes, xs)
    straddling = _straddles(field.real) & _straddles(field.imag)

    # permanent nodes are reported on their own; their columns carry no transients
    for node in stationary_nodes(state):
        column = int(numpy.searchsorted(xs, node)) - 1
        straddling[:, max(column, 0) : column + 2] = False

    def residual(point: numpy.ndarray) -> list[float]:
        value = complex(state.evaluate(float(point[0]), float(point[1])))
        return [value.real, value.imag]

    events = []
    failed = 0
    for i_t, i_x in numpy.argwhere(straddling):
        guess = [0.5 * (xs[i_x] + xs[i_x + 1]), 0.5 * (ts[i_t] + ts[i_t + 1])]
        solution = optimize.root(residual, guess, method="hybr", tol=1e-15)
        x, t = (float(v) for v in solution.x)
        value = abs(state.evaluate(x, t))
        if value >= tol or not _inside(state, x) or not t_a <= t <= t_b:
            failed += 1
            continue
        if is_stationary_node(state, x):
            continue
        events.append(ZeroEvent(x=x, t=t, kind=ZeroKind.TRANSIENT, residual=value))
    cell_x = seg.width / n_x
    cell_t = (t_b - t_a) / max(n_t - 1, 1)
    return _merge_space_time(events, 0.5 * cell_x, 0.5 * cell_t), failed
