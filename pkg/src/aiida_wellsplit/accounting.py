"""Energy bookkeeping for the barrier that splits the well."""

import math
from dataclasses import dataclass

import numpy

from aiida_wellsplit.exceptions import DomainError
from aiida_wellsplit.splitter import SplitConfig, basis_change
from aiida_wellsplit.units import Units
from aiida_wellsplit.utils import LOGGER, TransitionModel
from aiida_wellsplit.wellcore import WellState

LOGGER = LOGGER.getChild("accounting")

POST_SELECTION_TOL = 1e-14
DEFAULT_L_MAX = 200


def _overlap_row(state: WellState, cfg: SplitConfig, outcome, l_max: int):
    j, k = outcome
    if not 1 <= j <= cfg.n_wells or k < 1:
        raise DomainError(f"Outcome {outcome} does not name a sub-well mode.")
    n = state.n_modes
    if n > l_max:
        raise DomainError(f"State carries {n} modes but l_max is {l_max}.")
    return basis_change(cfg, n, k).blocks[j - 1][k - 1]


def transition_probs(
    model: TransitionModel,
    state: WellState,
    cfg: SplitConfig,
    outcome: tuple[int, int],
    l_max: int = DEFAULT_L_MAX,
) -> numpy.ndarray:
    """
    Return the weights P_{k_j}(l) that the particle came from mode l.

    Parameters
    ----------
    model : TransitionModel
        ``MODULUS`` uses |d_l|^2, ``WEAK`` the weak value
        Re(A_{k_j l} d_l / sum_l' A_{k_j l'} d_l') and ``MIXED`` the
        normalised |A_{k_j l}|^2 |d_l|^2.
    state : WellState
        State in the unsplit well.
    cfg : SplitConfig
        Barrier positions.
    outcome : tuple[int, int]
        The post-selected sub-well mode (j, k_j).
    l_max : int
        Largest original-well mode allowed in the state.

    Returns
    -------
    numpy.ndarray
        Weights for l = 1..n_modes. Weak weights are not clipped.
    """
    row = _overlap_row(state, cfg, outcome, l_max)
    d = state.coeffs
    if model is TransitionModel.MODULUS:
        return numpy.abs(d) ** 2
    if model is TransitionModel.WEAK:
        terms = row * d
        total = terms.sum()
        if abs(total) < POST_SELECTION_TOL:
            raise DomainError(
                f"Post-selection on outcome {outcome} has vanishing amplitude "
                f"{abs(total):.3e}; the weak value is undefined."
            )
        return numpy.real(terms / total)
    if model is TransitionModel.MIXED:
        weights = numpy.abs(row) ** 2 * numpy.abs(d) ** 2
        total = weights.sum()
        if total == 0.0:
            raise DomainError(f"Outcome {outcome} has zero probability.")
        return weights / total
    raise DomainError(f"Unknown transition model {model}.")


def _energy_gaps(state: WellState, cfg: SplitConfig, outcome) -> numpy.ndarray:
    j, k = outcome
    e_split = Units.PI2 * k**2 / cfg.segment(j).width ** 2
    return e_split - state.energies


def barrier_energy(
    model: TransitionModel,
    state: WellState,
    cfg: SplitConfig,
    outcome: tuple[int, int],
    l_max: int = DEFAULT_L_MAX,
) -> float:
    """Return <E^B> = -sum_l P_{k_j}(l) (E_j(k_j) - E0(l))."""
    weights = transition_probs(model, state, cfg, outcome, l_max)
    return float(-numpy.sum(weights * _energy_gaps(state, cfg, outcome)))


@dataclass(frozen=True)
class ZeroTheoremCheck:
    """Weak-value barrier energy for a left-well outcome, two ways."""

    numerator: float
    closed_form: float
    weak_energy: float

    @property
    def defect(self) -> float:
        """Disagreement between the closed form and the weak-model sum."""
        return abs(self.closed_form - self.weak_energy)


def zero_theorem_check(
    state: WellState, x0: float, k: int = 1, l_max: int = DEFAULT_L_MAX
) -> ZeroTheoremCheck:
    """
    Evaluate the weak-model barrier energy for outcome (1, k) of a split at x0.

    In closed form the energy is -Re(sum_l d_l s_l / sum_l d_l s_l / dE_l),
    with s_l = sin(l pi x0 / L) and dE_l = E_1(k) - E0(l); the numerator is
    proportional to Psi(x0), so the energy vanishes whenever the barrier
    sits on a zero.

    Returns
    -------
    ZeroTheoremCheck
        The numerator, the closed-form value and the weak-model sum.
    """
    length = state.segment.width
    cfg = SplitConfig((x0,), length)
    outcome = (1, k)
    ls = state.modes
    sines = numpy.sin(ls * math.pi * x0 / length)
    gaps = _energy_gaps(state, cfg, outcome)
    numerator = complex(numpy.sum(state.coeffs * sines))

    row = _overlap_row(state, cfg, outcome, l_max)
    # A_{k l} = c_k s_l / dE_l away from resonance; at resonance use A / c_k
    c_k = -2.0 * k * length**1.5 * math.sqrt(x0) * (-1) ** k * math.pi / (
        x0**2 * length**2
    )
    resonant = numpy.abs(gaps) < 1e-12 * Units.PI2 * k**2 / x0**2
    safe = numpy.where(resonant, 1.0, gaps)
    ratios = numpy.where(resonant, row / c_k, sines / safe)
    denominator = complex(numpy.sum(state.coeffs * ratios))
    closed_form = 0.0 if numerator == 0 else -(numerator / denominator).real

    weak = barrier_energy(TransitionModel.WEAK, state, cfg, outcome, l_max)
    return ZeroTheoremCheck(numerator.real, float(closed_form), weak)


@dataclass(frozen=True)
class AccountingRow:
    """Barrier energy of one outcome under one transition model."""

    model: TransitionModel
    j: int
    k: int
    probability: float
    barrier_energy: float


def accounting_table(
    state: WellState,
    cfg: SplitConfig,
    outcomes,
    models=tuple(TransitionModel),
    l_max: int = DEFAULT_L_MAX,
) -> list[AccountingRow]:
    """Tabulate P(k_j) and <E^B> for every (model, outcome) pair."""
    rows = []
    for model in models:
        for j, k in outcomes:
            amplitude = complex(
                numpy.sum(_overlap_row(state, cfg, (j, k), l_max) * state.coeffs)
            )
            energy = barrier_energy(model, state, cfg, (j, k), l_max)
            LOGGER.debug(f"{model.name} outcome ({j}, {k}): <E^B> = {energy:.6g}")
            rows.append(AccountingRow(model, j, k, abs(amplitude) ** 2, energy))
    return rows
