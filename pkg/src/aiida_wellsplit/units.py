"""Unit convention and display conversion utilities."""

import math


class Units:
    """
    Dimensionless unit convention used throughout the package.

    Lengths are in units of the well length L, energies in units of
    hbar^2 / (2 M L^2) and times in units of 2 M L^2 / hbar, with hbar = 1 and
    2M = 1. Published checkpoints are quoted as multiples of pi^2; the
    converters below only ever apply to displayed values.
    """

    HBAR = 1.0
    TWO_M = 1.0
    LENGTH = 1.0
    PI2 = math.pi**2

    @classmethod
    def to_pi2(cls, energy: float) -> float:
        """Express an energy as a multiple of pi^2."""
        return energy / cls.PI2

    @classmethod
    def from_pi2(cls, multiple: float) -> float:
        """Convert a multiple of pi^2 back to base energy units."""
        return multiple * cls.PI2

    @classmethod
    def to_ground_units(cls, energy: float, length: float = LENGTH) -> float:
        """Express an energy as a multiple of the ground level E0(1) of the well."""
        return energy * length**2 / cls.PI2
