"""Workflow for raising the barrier over a grid of states, durations and widths."""

import itertools

from aiida.engine import ProcessSpec, ToContext, WorkChain
from aiida.orm import ArrayData, Dict, ProcessNode, Str
from aiida.plugins.factories import CalculationFactory

from aiida_wellsplit.calculations.utils import collate_sweep
from aiida_wellsplit.config import RunConfig
from aiida_wellsplit.tdse import DEFAULT_STEPS

WellSplitCalculation = CalculationFactory("wellsplit")

# Sections of the sweep configuration passed through to every simulate run.
SHARED_SECTIONS = ("length", "mesh", "simulation")


class BarrierSweepWorkChain(WorkChain):
    """Run one ``simulate`` calculation per sweep point and collate the results."""

    @classmethod
    def define(cls, spec: ProcessSpec) -> None:
        """Define the AiiDA process specification."""
        super().define(spec)

        spec.expose_inputs(WellSplitCalculation, include=("code",))

        spec.input(
            "parameters",
            valid_type=Dict,
            validator=RunConfig.validate_parameters,
            required=True,
            help=(
                "A run configuration with a 'sweep' section. The 'length', 'mesh', "
                "'simulation' and 'ramp.center' entries are shared by every run."
            ),
        )

        spec.output(
            "sweep",
            valid_type=ArrayData,
            required=False,
            help=(
                "One row per (state, duration, width) simulation, with aborted and "
                "trusted flags."
            ),
        )
        spec.output(
            "fits",
            valid_type=Dict,
            required=False,
            help="Fitted exponents of the sweep energies.",
        )

        spec.exit_code(
            350,
            "ERROR_NO_INPUTS",
            message=(
                "The 'sweep' section must give at least one state, one duration "
                "and one width."
            ),
        )
        spec.exit_code(
            351,
            "ERROR_ALL_RUNS_FAILED",
            message="Every simulate calculation of the sweep failed.",
        )

        spec.outline(
            cls.validate_inputs,
            cls.submit_jobs,
            cls.collate_results,
        )

    def validate_inputs(self):
        """Validate the inputs provided to the WorkChain."""
        sweep = self.inputs.parameters.get_dict().get("sweep", {})
        if not sweep.get("states") or not sweep.get("taus") or not sweep.get("widths"):
            return self.exit_codes.ERROR_NO_INPUTS
        return None

    def run_parameters(self, state: dict, tau: float, width: float) -> dict:
        """Return the configuration of the simulate run for one sweep point."""
        parameters = self.inputs.parameters.get_dict()
        sweep = parameters["sweep"]
        length = parameters.get("length", 1.0)
        config = {key: parameters[key] for key in SHARED_SECTIONS if key in parameters}
        simulation = dict(config.get("simulation", {}))
        steps = simulation.get("steps", DEFAULT_STEPS)
        simulation.setdefault("trace_every", max(steps // 20, 1))
        config["simulation"] = simulation
        config["state"] = state
        config["ramp"] = {
            "width": width,
            "center": parameters.get("ramp", {}).get("center", 0.375 * length),
            "peak": sweep.get("peak", 1e4),
            "duration": tau,
        }
        return config

    def submit_jobs(self):
        """Submit one simulate calculation per (state, duration, width)."""
        futures: dict[str, ProcessNode] = {}
        self.ctx.points = {}
        sweep = self.inputs.parameters.get_dict()["sweep"]
        points = itertools.product(
            sweep["states"].items(), sweep["taus"], sweep["widths"]
        )
        for index, ((state_id, state), tau, width) in enumerate(points):
            key = f"run_{index}"
            parameters = self.run_parameters(state, tau, width)
            inputs = {
                "code": self.inputs.code,
                "task": Str("simulate"),
                "parameters": Dict(parameters),
            }
            future = self.submit(WellSplitCalculation, **inputs)
            future.description = f"Barrier ramp on {state_id}: tau={tau}, w={width}"
            futures[key] = future
            self.ctx.points[key] = {
                "state_id": state_id,
                "tau": tau,
                "w": width,
                "V_m": parameters["ramp"]["peak"],
            }
        self.report(f"Submitted {len(futures)} simulate calculations")
        return ToContext(**futures)

    def collate_results(self):
        """Collect every run into the sweep outputs, flagging the failed ones."""
        reports = {}
        points = {}
        for key, point in self.ctx.points.items():
            node = self.ctx[key]
            points[key] = dict(point, exit_status=node.exit_status)
            report = getattr(node.outputs, "report", None)
            if report is not None:
                reports[key] = report
            if not node.is_finished_ok:
                self.report(
                    f"Run {key} ({point['state_id']}) finished with exit status "
                    f"{node.exit_status}; it is flagged and left out of the fit."
                )
        if not reports:
            return self.exit_codes.ERROR_ALL_RUNS_FAILED
        results = collate_sweep(Dict(points), **reports)
        self.out("sweep", results["sweep"])
        self.out("fits", results["fits"])
        return None
