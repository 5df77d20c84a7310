"""Exceptions raised by the well-splitting library."""


class WellSplitError(Exception):
    """Base exception for all well-splitting errors."""


class DomainError(WellSplitError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class ConfigError(WellSplitError, ValueError):
    """A run configuration failed validation."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)


class SpectrumError(WellSplitError, RuntimeError):
    """The delta-barrier root search failed to bracket or count all levels."""


class TruncationError(WellSplitError, RuntimeError):
    """Mode caps are too small to carry the state through a split."""

    def __init__(self, defect: float, message: str = ""):
        self.defect = defect
        super().__init__(
            message or f"Post-split norm defect {defect:.3e} exceeds 1e-3."
        )


class NumericalValidityError(WellSplitError, RuntimeError):
    """The time stepper left its regime of validity."""

    def __init__(self, step: int, ratio: float, threshold: float):
        self.step = step
        self.ratio = ratio
        self.threshold = threshold
        super().__init__(
            f"Correction ratio {ratio:.3e} at step {step} exceeds {threshold:.1e}."
        )
