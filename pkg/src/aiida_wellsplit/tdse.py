"""Time-dependent evolution of a well state while a Gaussian barrier is raised."""

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import trapezoid

from aiida_wellsplit.exceptions import (
    DomainError,
    NumericalValidityError,
    WellSplitError,
)
from aiida_wellsplit.units import Units
from aiida_wellsplit.utils import DESK_SCALE_SPACING, LOGGER, RampLaw, desk_scale
from aiida_wellsplit.wellcore import WellState

LOGGER = LOGGER.getChild("tdse")

DEFAULT_SPACING = 1e-5
DEFAULT_STEPS = 1000
VALIDITY_RATIO = 1e-2
NORM_TRUST = 1e-6
BIN_RATIO = 1e4
N_BINS = 4
NARROW_WIDTH = 1e-2

C_K = 4.9895e-9
C_V = -1.5921e-7
P_V = 4.3164
Q_V = 2.3146


@dataclass(frozen=True)
class Mesh:
    """Uniform mesh of ``n_points`` points on [0, L] with Dirichlet ends."""

    n_points: int
    length: float = Units.LENGTH

    def __post_init__(self):
        if self.n_points < 3:
            raise DomainError(f"A mesh needs at least 3 points, got {self.n_points}.")

    @classmethod
    def from_spacing(cls, spacing: float, length: float = Units.LENGTH) -> "Mesh":
        """Build the mesh whose spacing is closest to ``spacing``."""
        if spacing <= 0.0:
            raise DomainError(f"Mesh spacing must be positive, got {spacing}.")
        return cls(int(round(length / spacing)) + 1, length)

    @classmethod
    def default(
        cls, spacing: float = DEFAULT_SPACING, length: float = Units.LENGTH
    ) -> "Mesh":
        """Return the production mesh, coarsened when desk scale is requested."""
        if desk_scale():
            spacing = max(spacing, DESK_SCALE_SPACING * length)
        return cls.from_spacing(spacing, length)

    @property
    def dx(self) -> float:
        """Mesh spacing."""
        return self.length / (self.n_points - 1)

    @cached_property
    def x(self) -> numpy.ndarray:
        """Mesh positions."""
        return numpy.linspace(0.0, self.length, self.n_points)


@dataclass(frozen=True)
class BarrierRamp:
    """A Gaussian barrier of full width ``width`` raised linearly to ``peak``."""

    width: float
    center: float
    peak: float
    duration: float
    law: RampLaw = RampLaw.LINEAR

    def __post_init__(self):
        if self.width <= 0.0:
            raise DomainError(f"Barrier width must be positive, got {self.width}.")
        if self.duration <= 0.0:
            raise DomainError(f"Ramp duration must be positive, got {self.duration}.")

    def fraction(self, t: float) -> float:
        """Fraction of the peak height reached at time t."""
        if self.law is RampLaw.LINEAR:
            return min(max(t / self.duration, 0.0), 1.0)
        raise DomainError(f"Unsupported ramp law {self.law}.")

    def scale(self, t: float) -> float:
        """Barrier height V(t) = fraction(t) * peak."""
        return self.fraction(t) * self.peak


def gaussian_kernel(width: float, center: float, mesh: Mesh) -> numpy.ndarray:
    """
    Return exp(-4 ln 2 ((x - x0) / w)^2) normalised to unit integral on the mesh.

    Parameters
    ----------
    width : float
        Full width at half maximum.
    center : float
        Barrier centre.
    mesh : Mesh
        The spatial mesh.

    Returns
    -------
    numpy.ndarray
        Kernel values at the mesh points.
    """
    if width <= 0.0:
        raise DomainError(f"Kernel width must be positive, got {width}.")
    if width < 4.0 * mesh.dx:
        LOGGER.warning(
            f"Kernel width {width:.3e} is under-resolved by mesh spacing "
            f"{mesh.dx:.3e}."
        )
    kernel = numpy.exp(-4.0 * math.log(2.0) * ((mesh.x - center) / width) ** 2)
    return kernel / trapezoid(kernel, mesh.x)


def _on_mesh(state, mesh: Mesh) -> numpy.ndarray:
    if isinstance(state, WellState):
        values = numpy.asarray(state.evaluate(mesh.x), dtype=complex)
        values[[0, -1]] = 0.0
        return values
    values = numpy.asarray(state, dtype=complex)
    if values.shape != (mesh.n_points,):
        raise DomainError(
            f"Wavefunction has shape {values.shape}, mesh has {mesh.n_points} points."
        )
    return values


def overlap_aw(state, kernel: numpy.ndarray, mesh: Mesh) -> float:
    """Return A_w, the trapezoid integral of |psi(x, 0)|^2 G_w(x)."""
    psi = _on_mesh(state, mesh)
    return float(trapezoid(numpy.abs(psi) ** 2 * kernel, mesh.x))


def second_difference(values: numpy.ndarray, dx: float) -> numpy.ndarray:
    """Three-point second derivative; zero at the Dirichlet ends."""
    result = numpy.zeros_like(values)
    result[1:-1] = (values[2:] - 2.0 * values[1:-1] + values[:-2]) / dx**2
    return result


def kinetic_energy(psi: numpy.ndarray, mesh: Mesh) -> float:
    """Return -Re int psi* psi'' dx by the trapezoid rule."""
    lap = second_difference(psi, mesh.dx)
    return float(-numpy.real(trapezoid(numpy.conj(psi) * lap, mesh.x)))


def _two_sum(a: numpy.ndarray, b: numpy.ndarray):
    s = a + b
    ap = s - b
    bp = s - ap
    return s, (a - ap) + (b - bp)


class BinnedAccumulator:
    """
    Running compensated sum of per-step corrections, binned by magnitude.

    Increments are routed to the bin matching their size relative to the
    leading amplitude (boundaries at powers of 1e4), each bin keeps a
    two-sum error term, and bins are added from the smallest upwards.
    """

    def __init__(self, n_points: int, scale: float, n_bins: int = N_BINS):
        self.bounds = scale * BIN_RATIO ** -numpy.arange(1, n_bins)
        self.sums = numpy.zeros((n_bins, n_points), dtype=complex)
        self.errors = numpy.zeros((n_bins, n_points), dtype=complex)

    def add(self, increment: numpy.ndarray) -> None:
        """Accumulate one increment vector."""
        bins = numpy.searchsorted(-self.bounds, -numpy.abs(increment), side="right")
        for index in range(self.sums.shape[0]):
            part = numpy.where(bins == index, increment, 0.0)
            self.sums[index], error = _two_sum(self.sums[index], part)
            self.errors[index] += error

    def total(self) -> numpy.ndarray:
        """Return the freshly re-summed total."""
        result = numpy.zeros(self.sums.shape[1], dtype=complex)
        for index in reversed(range(self.sums.shape[0])):
            result = result + self.errors[index] + self.sums[index]
        return result


@dataclass(frozen=True)
class TracePoint:
    """Energy changes recorded during the ramp."""

    t: float
    v: float
    delta_k: float
    delta_v_dpsi: float


@dataclass(frozen=True)
class SimReport:
    """Outcome of one barrier ramp simulation."""

    psi: numpy.ndarray = field(repr=False)
    delta_psi: numpy.ndarray = field(repr=False)
    k0: float
    delta_k: float
    delta_v_dpsi: float
    delta_v_psi0: float
    a_w: float
    peak: float
    duration: float
    width: float
    norm_error: float
    max_ratio: float
    steps: int
    trace: tuple[TracePoint, ...] = ()

    @property
    def trusted(self) -> bool:
        """False when the norm drifted by more than 1e-6."""
        return self.norm_error <= NORM_TRUST

    def to_dict(self) -> dict:
        """Return the scalar content of the report, ready for JSON."""
        return {
            "K0": self.k0,
            "dK": self.delta_k,
            "dV_dpsi": self.delta_v_dpsi,
            "dV_psi0": self.delta_v_psi0,
            "A_w": self.a_w,
            "V_m": self.peak,
            "tau": self.duration,
            "w": self.width,
            "norm_err": self.norm_error,
            "max_ratio": self.max_ratio,
            "steps": self.steps,
            "trusted": self.trusted,
            "trace": [asdict(point) for point in self.trace],
        }


def simulate(
    state,
    ramp: BarrierRamp,
    mesh: Mesh,
    n_steps: int = DEFAULT_STEPS,
    trace_every: int | None = None,
    validity_ratio: float = VALIDITY_RATIO,
) -> SimReport:
    """
    Evolve a state while the barrier is raised and book the energy changes.

    Each step applies psi <- psi + i dt (psi'' - Vbar psi), where Vbar is the
    Simpson average of the barrier over the step. The initial state psi_0 is
    held fixed and the change delta_psi is accumulated separately with
    :class:`BinnedAccumulator`, so that the tiny corrections are not lost
    against the O(1) amplitude.

    Parameters
    ----------
    state : WellState | numpy.ndarray
        Initial state, or its values on the mesh.
    ramp : BarrierRamp
        The barrier and its ramp.
    mesh : Mesh
        The spatial mesh.
    n_steps : int
        Number of time steps over the ramp duration.
    trace_every : int | None
        Record the energy changes every this many steps.
    validity_ratio : float
        Largest ||correction|| / ||psi|| allowed in a single step.

    Returns
    -------
    SimReport
        Energies at the end of the ramp and the step diagnostics.

    Raises
    ------
    NumericalValidityError
        If one step changes psi by more than ``validity_ratio``.
    """
    if n_steps < 1:
        raise DomainError(f"n_steps must be at least 1, got {n_steps}.")
    psi0 = _on_mesh(state, mesh)
    dx, x = mesh.dx, mesh.x
    dt = ramp.duration / n_steps
    kernel = gaussian_kernel(ramp.width, ramp.center, mesh)
    lap0 = second_difference(psi0, dx)
    density0 = numpy.abs(psi0) ** 2
    norm0 = float(trapezoid(density0, x))
    k0 = float(-numpy.real(trapezoid(numpy.conj(psi0) * lap0, x)))
    a_w = float(trapezoid(density0 * kernel, x))

    accumulator = BinnedAccumulator(mesh.n_points, float(numpy.max(numpy.abs(psi0))))
    delta = numpy.zeros_like(psi0)
    max_ratio = 0.0
    trace: list[TracePoint] = []

    def energies(change: numpy.ndarray, v: float) -> tuple[float, float]:
        lap = second_difference(change, dx)
        delta_k = -numpy.real(
            trapezoid(
                numpy.conj(change) * lap
                + numpy.conj(psi0) * lap
                + numpy.conj(change) * lap0,
                x,
            )
        )
        mixed = numpy.abs(change) ** 2 + 2.0 * numpy.real(numpy.conj(psi0) * change)
        return float(delta_k), float(trapezoid(mixed * kernel, x) * v)

    for step in range(n_steps):
        t = step * dt
        vbar = ramp.peak * (
            ramp.fraction(t)
            + 4.0 * ramp.fraction(t + 0.5 * dt)
            + ramp.fraction(t + dt)
        ) / 6.0
        psi = psi0 + delta
        lap = lap0 + second_difference(delta, dx)
        correction = 1j * dt * (lap - vbar * kernel * psi)
        correction[[0, -1]] = 0.0
        ratio = float(numpy.linalg.norm(correction) / numpy.linalg.norm(psi))
        max_ratio = max(max_ratio, ratio)
        if ratio > validity_ratio:
            raise NumericalValidityError(step, ratio, validity_ratio)
        accumulator.add(correction)
        delta = accumulator.total()
        if trace_every and (step + 1) % trace_every == 0:
            t_next = (step + 1) * dt
            v = ramp.scale(t_next)
            trace.append(TracePoint(t_next, v, *energies(delta, v)))

    psi = psi0 + delta
    delta_k, delta_v_dpsi = energies(delta, ramp.scale(ramp.duration))
    norm_error = abs(float(trapezoid(numpy.abs(psi) ** 2, x)) - norm0) / norm0
    report = SimReport(
        psi=psi,
        delta_psi=delta,
        k0=k0,
        delta_k=delta_k,
        delta_v_dpsi=delta_v_dpsi,
        delta_v_psi0=a_w * ramp.scale(ramp.duration),
        a_w=a_w,
        peak=ramp.peak,
        duration=ramp.duration,
        width=ramp.width,
        norm_error=norm_error,
        max_ratio=max_ratio,
        steps=n_steps,
        trace=tuple(trace),
    )
    if not report.trusted:
        LOGGER.warning(f"Norm error {norm_error:.3e} exceeds {NORM_TRUST:.0e}.")
    return report


def crank_nicolson_evolve(
    state,
    ramp: BarrierRamp,
    mesh: Mesh,
    n_steps: int = DEFAULT_STEPS,
    duration: float | None = None,
) -> numpy.ndarray:
    """
    Evolve a state through the ramp with the Crank-Nicolson scheme.

    The barrier is sampled at the middle of each step. Used as an
    independent reference for :func:`simulate`.
    """
    duration = ramp.duration if duration is None else duration
    psi = _on_mesh(state, mesh)
    dt = duration / n_steps
    kernel = gaussian_kernel(ramp.width, ramp.center, mesh)[1:-1]
    size = mesh.n_points - 2
    lap = sp.diags(
        [numpy.ones(size - 1), -2.0 * numpy.ones(size), numpy.ones(size - 1)],
        [-1, 0, 1],
    ) / mesh.dx**2
    identity = sp.identity(size, format="csc")
    inner = psi[1:-1]
    for step in range(n_steps):
        v = ramp.scale((step + 0.5) * dt)
        hamiltonian = -lap + sp.diags(v * kernel)
        lhs = (identity + 0.5j * dt * hamiltonian).tocsc()
        rhs = (identity - 0.5j * dt * hamiltonian) @ inner
        inner = spla.spsolve(lhs, rhs)
    result = numpy.zeros(mesh.n_points, dtype=complex)
    result[1:-1] = inner
    return result


@dataclass(frozen=True)
class FitPrediction:
    """Energy changes predicted by the fitted power laws."""

    delta_k: float
    delta_v: float
    extrapolated: bool


def fit_predict(tau: float, width: float, a_w: float, v: float) -> FitPrediction:
    """
    Evaluate the fitted laws for the kinetic and potential energy changes.

    dK = C_K A_w tau^2 V^4 / w^3 and dV = C_V A_w tau^2 V^p / w^q. Widths
    above 1e-2 lie outside the narrow-barrier regime of the fit.
    """
    delta_k = C_K * a_w * tau**2 * v**4 / width**3
    delta_v = C_V * a_w * tau**2 * v**P_V / width**Q_V
    return FitPrediction(delta_k, delta_v, width > NARROW_WIDTH)


def power_law_fit(x, y) -> tuple[float, float, float]:
    """
    Fit |y| = c x^p by least squares in log10 space.

    Returns
    -------
    tuple[float, float, float]
        The exponent p, the prefactor c and the RMS residual in dex.
    """
    logx = numpy.log10(numpy.asarray(x, dtype=float))
    logy = numpy.log10(numpy.abs(numpy.asarray(y, dtype=float)))
    slope, intercept = numpy.polyfit(logx, logy, 1)
    residual = logy - (slope * logx + intercept)
    rms = float(numpy.sqrt(numpy.mean(residual**2)))
    return float(slope), float(10.0**intercept), rms


@dataclass(frozen=True)
class SweepRow:
    """Summary of one simulation of a sweep."""

    state_id: str
    tau: float
    w: float
    v_m: float
    a_w: float = math.nan
    delta_k: float = math.nan
    delta_v_dpsi: float = math.nan
    delta_v_psi0: float = math.nan
    norm_error: float = math.nan
    aborted: bool = False
    message: str = ""
    trace: tuple[TracePoint, ...] = field(default=(), repr=False)


@dataclass(frozen=True)
class SweepFit:
    """Multi-parameter log-log regression of the sweep energies."""

    k_exponents: dict
    k_rms_log: float
    v_exponents: dict
    v_rms_log: float
    fixed_rms_log: float
    n_points: int

    def to_dict(self) -> dict:
        """Return the fit as a JSON-ready dictionary."""
        return asdict(self)


def _regress(tau, v, w, y) -> tuple[dict, float]:
    design = numpy.column_stack(
        [numpy.ones_like(tau), numpy.log10(tau), numpy.log10(v), numpy.log10(w)]
    )
    target = numpy.log10(y)
    coeffs, *_ = numpy.linalg.lstsq(design, target, rcond=None)
    rms = float(numpy.sqrt(numpy.mean((target - design @ coeffs) ** 2)))
    names = ("log_prefactor", "tau", "v", "w")
    return {name: float(c) for name, c in zip(names, coeffs)}, rms


def fit_sweep(rows, min_fraction: float = 0.5) -> SweepFit:
    """
    Regress dK / A_w and |dV_dpsi| / A_w against tau, V(t) and w.

    Trace points from the second half of each ramp of every completed,
    narrow-barrier run enter the regression, so that the V exponent measures
    the growth of the energy change with the ramp height.
    """
    tau, v, w, dk, dv = [], [], [], [], []
    fixed = []
    for row in rows:
        if row.aborted or row.w > NARROW_WIDTH or not row.a_w > 0.0:
            continue
        prediction = fit_predict(row.tau, row.w, row.a_w, row.v_m)
        if row.delta_k > 0.0:
            fixed.append(math.log10(row.delta_k / prediction.delta_k))
        for point in row.trace:
            if point.t < min_fraction * row.tau or point.delta_k <= 0.0:
                continue
            tau.append(row.tau)
            v.append(point.v)
            w.append(row.w)
            dk.append(point.delta_k / row.a_w)
            dv.append(abs(point.delta_v_dpsi) / row.a_w)
    if len(dk) < 4:
        raise DomainError("Too few narrow-barrier trace points to fit the sweep.")
    tau, v, w = (numpy.array(a) for a in (tau, v, w))
    k_exponents, k_rms = _regress(tau, v, w, numpy.array(dk))
    dv = numpy.array(dv)
    keep = dv > 0.0
    v_exponents, v_rms = _regress(tau[keep], v[keep], w[keep], dv[keep])
    fixed_rms = math.nan
    if fixed:
        fixed_rms = float(numpy.sqrt(numpy.mean(numpy.square(fixed))))
    return SweepFit(k_exponents, k_rms, v_exponents, v_rms, fixed_rms, len(dk))


def _sweep_cell(job) -> SweepRow:
    state_id, state, tau, w, center, peak, mesh, n_steps, trace_every = job
    ramp = BarrierRamp(width=w, center=center, peak=peak, duration=tau)
    try:
        report = simulate(state, ramp, mesh, n_steps, trace_every)
    except WellSplitError as exc:
        LOGGER.warning(f"Sweep cell {state_id}, tau={tau}, w={w} failed: {exc}")
        return SweepRow(state_id, tau, w, peak, aborted=True, message=str(exc))
    return SweepRow(
        state_id,
        tau,
        w,
        peak,
        a_w=report.a_w,
        delta_k=report.delta_k,
        delta_v_dpsi=report.delta_v_dpsi,
        delta_v_psi0=report.delta_v_psi0,
        norm_error=report.norm_error,
        trace=report.trace,
    )


@dataclass(frozen=True)
class SweepResult:
    """Rows of a sweep and, when enough runs completed, their regression."""

    rows: tuple[SweepRow, ...]
    fit: SweepFit | None


def sweep(
    states: dict,
    taus,
    widths,
    mesh: Mesh,
    peak: float = 1e4,
    center: float = 0.375,
    n_steps: int = DEFAULT_STEPS,
    trace_every: int | None = None,
    jobs: int = 1,
) -> SweepResult:
    """
    Run one simulation per (state, tau, w) combination.

    Failed runs are kept as aborted rows. With ``jobs > 1`` the runs are
    spread over a process pool; the rows keep the order of the combinations.
    """
    if not states or len(taus) == 0 or len(widths) == 0:
        raise DomainError("A sweep needs at least one state, tau and width.")
    trace_every = trace_every or max(n_steps // 20, 1)
    cells = [
        (sid, state, float(tau), float(w), center, peak, mesh, n_steps, trace_every)
        for (sid, state), tau, w in itertools.product(states.items(), taus, widths)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = tuple(pool.map(_sweep_cell, cells))
    else:
        rows = tuple(_sweep_cell(cell) for cell in cells)
    try:
        fit = fit_sweep(rows)
    except DomainError as exc:
        LOGGER.info(f"Sweep not fitted: {exc}")
        fit = None
    return SweepResult(rows, fit)
