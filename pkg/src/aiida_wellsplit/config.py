"""Validation and interpretation of the JSON run configuration."""

import json
from pathlib import Path

import numpy

from aiida_wellsplit.exceptions import ConfigError
from aiida_wellsplit.splitter import DEFAULT_CAPS, SplitConfig
from aiida_wellsplit.tdse import (
    DEFAULT_SPACING,
    DEFAULT_STEPS,
    VALIDITY_RATIO,
    BarrierRamp,
    Mesh,
)
from aiida_wellsplit.units import Units
from aiida_wellsplit.utils import Task, TransitionModel
from aiida_wellsplit.wellcore import WellSegment, WellState, make_alpha_state

Number = float | int


class RunConfig:
    """
    A validated run configuration.

    The configuration is a JSON object whose sections are listed by
    :meth:`get_valid_config_keys`. Every section rejects unknown keys, and
    errors carry the schema path of the offending entry.
    """

    REQUIRED_SECTIONS = {
        Task.SPECTRUM: ("state", "split"),
        Task.ZEROS: ("state",),
        Task.DELTA: ("delta",),
        Task.SIMULATE: ("state", "ramp"),
        Task.SWEEP: ("sweep",),
        Task.CARPET: ("state", "split", "carpet"),
        Task.ACCOUNTING: ("state", "split", "accounting"),
    }

    def __init__(self, data: dict | None = None):
        data = {} if data is None else dict(data)
        error = self.find_error(data)
        if error:
            raise ConfigError(*error)
        self.data = data

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        """Load and validate a JSON configuration file."""
        try:
            with open(path) as f:
                data = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError("", f"{path} is not valid JSON: {exc}") from exc
        except OSError as exc:
            raise ConfigError("", f"Cannot read {path}: {exc.strerror}") from exc
        if not isinstance(data, dict):
            raise ConfigError("", "The configuration must be a JSON object.")
        return cls(data)

    @classmethod
    def get_valid_config_keys(cls) -> dict[str, type]:
        """Return the top-level sections and their types."""
        return {
            "length": Number,
            "state": dict,
            "split": dict,
            "caps": dict,
            "zeros": dict,
            "delta": dict,
            "ramp": dict,
            "mesh": dict,
            "simulation": dict,
            "sweep": dict,
            "carpet": dict,
            "accounting": dict,
        }

    @classmethod
    def get_valid_state_keys(cls, kind: str = "") -> dict[str, type]:
        """Return the keys accepted by a state specification of a given kind."""
        valid_keys = {"kind": str}
        if kind == "alpha":
            valid_keys.update({"x0": Number, "mirrored": bool})
        elif kind == "eigen":
            valid_keys.update({"l": int})
        elif kind == "modes":
            valid_keys.update({"coefficients": list})
        return valid_keys

    @classmethod
    def get_valid_section_keys(cls, section: str) -> dict[str, type]:
        """Return the keys accepted by one configuration section."""
        return {
            "split": {"positions": list, "time": Number, "zero_tol": Number},
            "caps": {"l_max": int, "k_max": int},
            "zeros": {"time": Number, "window": list, "grid": list, "tol": Number},
            "delta": {"x0": Number, "v_grid": list, "levels": int},
            "ramp": {
                "width": Number,
                "center": Number,
                "peak": Number,
                "duration": Number,
            },
            "mesh": {"spacing": Number},
            "simulation": {
                "steps": int,
                "trace_every": int,
                "validity_ratio": Number,
            },
            "sweep": {"states": dict, "taus": list, "widths": list, "peak": Number},
            "carpet": {
                "t_split": Number,
                "t_end": Number,
                "x_points": int,
                "t_points": int,
            },
            "accounting": {"outcomes": list, "models": list},
        }[section]

    @staticmethod
    def _check_keys(value: dict, valid_keys: dict[str, type]) -> str | None:
        invalid_keys = set(value.keys()).difference(set(valid_keys.keys()))
        if invalid_keys:
            return (
                "The following parameter keys are invalid: "
                f"{', '.join(sorted(invalid_keys)):s}. Valid keys are: "
                f"{', '.join(valid_keys.keys()):s}"
            )
        return None

    @staticmethod
    def _check_type(key: str, val, expected: type) -> str | None:
        if isinstance(val, bool) and expected is not bool:
            return f"The parameter '{key:s}' must not be a Boolean value."
        if not isinstance(val, expected):
            if expected == Number:
                return f"The parameter '{key:s}' must be of type {float.__name__:s}."
            return f"The parameter '{key:s}' must be of type {expected.__name__:s}."
        return None

    @classmethod
    def _check_mapping(
        cls, path: str, value: dict, valid_keys: dict[str, type]
    ) -> tuple[str, str] | None:
        error = cls._check_keys(value, valid_keys)
        if error:
            return path, error
        for key, val in value.items():
            error = cls._check_type(key, val, valid_keys[key])
            if error:
                return f"{path}.{key}", error
        return None

    @classmethod
    def _check_numbers(
        cls, path: str, values, length: int | None = None, integer: bool = False
    ) -> tuple[str, str] | None:
        if length is not None and len(values) != length:
            return path, f"Expected {length} entries, got {len(values)}."
        kind = int if integer else Number
        for val in values:
            if isinstance(val, bool) or not isinstance(val, kind):
                return path, f"Entries must be {'integers' if integer else 'numbers'}."
        return None

    @classmethod
    def _check_state(cls, path: str, value) -> tuple[str, str] | None:
        if not isinstance(value, dict):
            return path, "A state specification must be an object."
        kind = value.get("kind", "")
        if kind not in ("alpha", "eigen", "modes"):
            return (
                f"{path}.kind",
                f"The state kind '{kind}' is not one of alpha, eigen or modes.",
            )
        error = cls._check_mapping(path, value, cls.get_valid_state_keys(kind))
        if error:
            return error
        if kind == "alpha" and "x0" not in value:
            return f"{path}.x0", "An alpha state needs the zero position x0."
        if kind == "eigen" and value.get("l", 0) < 1:
            return f"{path}.l", "The mode index l must be a positive integer."
        if kind == "modes":
            coefficients = value.get("coefficients", [])
            if not coefficients:
                return f"{path}.coefficients", "At least one coefficient is needed."
            for pair in coefficients:
                if not isinstance(pair, list) or cls._check_numbers(path, pair, 2):
                    return (
                        f"{path}.coefficients",
                        "Coefficients must be [re, im] pairs of numbers.",
                    )
        return None

    @classmethod
    def find_error(cls, data: dict) -> tuple[str, str] | None:
        """Return the (schema path, message) of the first problem, or None."""
        error = cls._check_mapping("", data, cls.get_valid_config_keys())
        if error:
            return error[0].lstrip("."), error[1]
        if data.get("length", 1.0) <= 0:
            return "length", "The well length must be positive."
        if "state" in data:
            error = cls._check_state("state", data["state"])
            if error:
                return error
        for section, value in data.items():
            if section in ("length", "state"):
                continue
            error = cls._check_mapping(
                section, value, cls.get_valid_section_keys(section)
            )
            if error:
                return error
        return cls._check_values(data)

    @classmethod
    def _check_values(cls, data: dict) -> tuple[str, str] | None:
        split = data.get("split", {})
        if "positions" in split:
            error = cls._check_numbers("split.positions", split["positions"])
            if error:
                return error
            if not split["positions"]:
                return "split.positions", "At least one barrier position is needed."
        for key in ("l_max", "k_max"):
            if data.get("caps", {}).get(key, 1) < 1:
                return f"caps.{key}", "Mode caps must be positive."
        zeros = data.get("zeros", {})
        if "window" in zeros:
            error = cls._check_numbers("zeros.window", zeros["window"], 2)
            if error:
                return error
            if zeros["window"][1] <= zeros["window"][0]:
                return "zeros.window", "The window must satisfy t_a < t_b."
        if "grid" in zeros:
            error = cls._check_numbers("zeros.grid", zeros["grid"], 2, integer=True)
            if error:
                return error
        delta = data.get("delta", {})
        if "v_grid" in delta:
            error = cls._check_numbers("delta.v_grid", delta["v_grid"])
            if error:
                return error
            if any(v < 0 for v in delta["v_grid"]):
                return "delta.v_grid", "Barrier strengths must be non-negative."
        if delta.get("levels", 1) < 1:
            return "delta.levels", "At least one level is needed."
        for key in ("x_points", "t_points"):
            if data.get("carpet", {}).get(key, 1) < 1:
                return f"carpet.{key}", "The carpet needs at least one sample."
        for key in ("width", "duration"):
            if data.get("ramp", {}).get(key, 1.0) <= 0:
                return f"ramp.{key}", f"The ramp {key} must be positive."
        if data.get("mesh", {}).get("spacing", 1.0) <= 0:
            return "mesh.spacing", "The mesh spacing must be positive."
        if data.get("simulation", {}).get("steps", 1) < 1:
            return "simulation.steps", "At least one time step is needed."
        sweep = data.get("sweep", {})
        for state_id, spec in sweep.get("states", {}).items():
            error = cls._check_state(f"sweep.states.{state_id}", spec)
            if error:
                return error
        for key in ("taus", "widths"):
            if key in sweep:
                error = cls._check_numbers(f"sweep.{key}", sweep[key])
                if error:
                    return error
                if any(v <= 0 for v in sweep[key]):
                    return f"sweep.{key}", "Sweep values must be positive."
        accounting = data.get("accounting", {})
        for outcome in accounting.get("outcomes", []):
            if not isinstance(outcome, list) or cls._check_numbers(
                "accounting.outcomes", outcome, 2, integer=True
            ):
                return "accounting.outcomes", "Outcomes must be [j, k] integer pairs."
        for model in accounting.get("models", []):
            if str(model).upper() not in TransitionModel.__members__:
                return (
                    "accounting.models",
                    f"The model '{model}' is not one of modulus, weak or mixed.",
                )
        return None

    @classmethod
    def validate_parameters(cls, value, _) -> str | None:
        """
        Validate a configuration supplied as an AiiDA ``Dict`` or a mapping.

        Returns
        -------
        str | None
            Returns None if the configuration is valid, otherwise an error
            message prefixed with the schema path.
        """
        data = value.get_dict() if hasattr(value, "get_dict") else dict(value)
        error = cls.find_error(data)
        if error:
            path, message = error
            return f"{path}: {message}" if path else message
        return None

    def require(self, task: Task) -> None:
        """Check that the sections needed by a task are present."""
        for section in self.REQUIRED_SECTIONS[task]:
            if section not in self.data:
                raise ConfigError(
                    section, f"Section required by '{task.name.lower()}' is missing."
                )
        if task in (Task.SPECTRUM, Task.CARPET, Task.ACCOUNTING):
            if "positions" not in self.data["split"]:
                raise ConfigError("split.positions", "Barrier positions are required.")

    def section(self, name: str) -> dict:
        """Return a configuration section, empty if absent."""
        return dict(self.data.get(name, {}))

    @property
    def length(self) -> float:
        """Well length L."""
        return float(self.data.get("length", Units.LENGTH))

    def build_state(self, spec: dict | None = None, path: str = "state") -> WellState:
        """Build the well state described by a state specification."""
        spec = self.data["state"] if spec is None else spec
        segment = WellSegment(0.0, self.length)
        try:
            if spec["kind"] == "alpha":
                return make_alpha_state(
                    float(spec["x0"]), self.length, spec.get("mirrored", False)
                )
            if spec["kind"] == "eigen":
                return WellState.eigenstate(spec["l"], segment)
            coeffs = numpy.array([complex(re, im) for re, im in spec["coefficients"]])
            return WellState.from_coefficients(coeffs, segment)
        except ValueError as exc:
            raise ConfigError(path, str(exc)) from exc

    def split_config(self) -> SplitConfig:
        """Return the barrier positions as a SplitConfig."""
        try:
            return SplitConfig(tuple(self.data["split"]["positions"]), self.length)
        except ValueError as exc:
            raise ConfigError("split.positions", str(exc)) from exc

    @property
    def split_time(self) -> float:
        """Time at which the split is applied."""
        return float(self.section("split").get("time", 0.0))

    def caps(self, override: tuple[int, int] | None = None) -> tuple[int, int]:
        """Return (l_max, k_max), preferring an explicit override."""
        if override is not None:
            return override
        caps = self.section("caps")
        return (
            int(caps.get("l_max", DEFAULT_CAPS[0])),
            int(caps.get("k_max", DEFAULT_CAPS[1])),
        )

    def ramp(self) -> BarrierRamp:
        """Return the barrier ramp."""
        ramp = self.section("ramp")
        missing = [k for k in ("width", "peak", "duration") if k not in ramp]
        if missing:
            raise ConfigError(f"ramp.{missing[0]}", "Required ramp parameter missing.")
        return BarrierRamp(
            width=float(ramp["width"]),
            center=float(ramp.get("center", 0.375 * self.length)),
            peak=float(ramp["peak"]),
            duration=float(ramp["duration"]),
        )

    def mesh(self) -> Mesh:
        """Return the simulation mesh, honouring desk scale."""
        spacing = self.section("mesh").get("spacing", DEFAULT_SPACING * self.length)
        return Mesh.default(float(spacing), self.length)

    def simulation(self) -> dict:
        """Return the time-stepping options with defaults filled in."""
        options = self.section("simulation")
        return {
            "n_steps": int(options.get("steps", DEFAULT_STEPS)),
            "trace_every": options.get("trace_every"),
            "validity_ratio": float(options.get("validity_ratio", VALIDITY_RATIO)),
        }

    def sweep_states(self) -> dict[str, WellState]:
        """Build the states of a sweep, keyed by their identifiers."""
        states = self.section("sweep").get("states", {})
        if not states:
            raise ConfigError("sweep.states", "A sweep needs at least one state.")
        return {
            state_id: self.build_state(spec, f"sweep.states.{state_id}")
            for state_id, spec in states.items()
        }

    def models(self) -> list[TransitionModel]:
        """Return the transition models of the accounting section."""
        names = self.section("accounting").get("models", ["modulus", "weak", "mixed"])
        return [TransitionModel[str(name).upper()] for name in names]
