"""Utility types and helpers shared by the aiida-wellsplit modules."""

import os
from collections.abc import Callable
from enum import Enum, auto
from functools import lru_cache

import numpy
from aiida.common.log import AIIDA_LOGGER

LOGGER = AIIDA_LOGGER.getChild("wellsplit")

DESK_SCALE_ENV = "WELLSPLIT_DESK_SCALE"
DESK_SCALE_SPACING = 1e-4


class TransitionModel(Enum):
    """Interpretations of the transition probability P_{k_j}(l)."""

    MODULUS = auto()
    WEAK = auto()
    MIXED = auto()


class ZeroKind(Enum):
    """Classification of a wavefunction zero."""

    STATIONARY = auto()
    TRANSIENT = auto()


class LevelClass(Enum):
    """Classification of a delta-barrier eigenlevel."""

    GENERIC = auto()
    PERSISTENT_NODE = auto()


class RampLaw(Enum):
    """Time law used to raise a barrier."""

    LINEAR = auto()


class Task(Enum):
    """Subcommands of the wellsplit executable."""

    SPECTRUM = auto()
    ZEROS = auto()
    DELTA = auto()
    SIMULATE = auto()
    SWEEP = auto()
    CARPET = auto()
    ACCOUNTING = auto()


def format_float(value: float) -> str:
    """Format a float with 17 significant digits for reproducible output."""
    return f"{float(value):.17g}"


def desk_scale() -> bool:
    """Return True when the CI-scale mesh has been requested."""
    return os.environ.get(DESK_SCALE_ENV, "0").strip().lower() in ("1", "true", "yes")


@lru_cache(maxsize=16)
def _legendre_rule(order: int) -> tuple[numpy.ndarray, numpy.ndarray]:
    return numpy.polynomial.legendre.leggauss(order)


def composite_gauss_legendre(
    func: Callable[[numpy.ndarray], numpy.ndarray],
    a: float,
    b: float,
    order: int = 32,
    panels: int = 16,
) -> complex | float:
    """
    Integrate a vectorised function with a composite Gauss-Legendre rule.

    Parameters
    ----------
    func : Callable
        Function accepting an array of abscissae.
    a, b : float
        Integration limits.
    order : int
        Number of nodes per panel.
    panels : int
        Number of equal-width panels on [a, b].

    Returns
    -------
    complex | float
        The quadrature estimate.
    """
    nodes, weights = _legendre_rule(order)
    edges = numpy.linspace(a, b, panels + 1)
    half = 0.5 * numpy.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    return numpy.sum(w * func(x))
