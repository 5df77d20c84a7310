"""Core well-splitting calculations module."""

import json

from aiida.common import CalcInfo, CodeInfo
from aiida.common.folders import Folder
from aiida.engine import CalcJob, CalcJobProcessSpec, PortNamespace
from aiida.orm import ArrayData, Dict, Float, List, Str

from aiida_wellsplit import cli
from aiida_wellsplit.config import RunConfig
from aiida_wellsplit.exceptions import ConfigError
from aiida_wellsplit.utils import Task


class WellSplitCalculation(CalcJob):
    """
    AiiDA calculation plugin wrapper for the ``wellsplit`` executable.

    One calculation runs one task of the executable on a run configuration:
      - spectrum: interference spectrum and outcome probabilities
      - zeros: stationary and transient zeros of a state
      - delta: spectrum of the well with a delta barrier
      - simulate: a single barrier-raising simulation
      - sweep: a grid of barrier-raising simulations
      - carpet: the density through an instantaneous split
      - accounting: barrier energy under the transition models

    """

    FILE_CONFIG = "config.json"
    FILE_STDOUT = "output.log"
    FILE_STDERR = "error.log"

    TASK_FILES = {
        Task.SPECTRUM: (cli.FILE_SPECTRUM,),
        Task.ZEROS: (cli.FILE_ZEROS,),
        Task.DELTA: (cli.FILE_DELTA,),
        Task.SIMULATE: (cli.FILE_REPORT,),
        Task.SWEEP: (cli.FILE_SWEEP, cli.FILE_FITS),
        Task.CARPET: (cli.FILE_CARPET,),
        Task.ACCOUNTING: (cli.FILE_ACCOUNTING,),
    }

    @classmethod
    def define(cls, spec: CalcJobProcessSpec) -> None:
        """
        Define the inputs, outputs and metadata of the well-splitting calculation.

        Parameters
        ----------
        spec : CalcJobProcessSpec
            The AiiDA Process specification object for the job.
        """
        super().define(spec)
        spec.input(
            "task",
            valid_type=Str,
            validator=cls.validate_task,
            required=True,
            help=(
                "The wellsplit subcommand to run: spectrum, zeros, delta, simulate, "
                "sweep, carpet or accounting."
            ),
        )
        spec.input(
            "parameters",
            valid_type=Dict,
            validator=RunConfig.validate_parameters,
            required=True,
            help="The run configuration, written to the job as 'config.json'.",
        )
        spec.input(
            "caps",
            valid_type=List,
            validator=cls.validate_caps,
            required=False,
            help=(
                "Mode caps [l_max, k_max] of the change of basis, overriding the "
                "'caps' section of the run configuration."
            ),
        )

        # Validate inputs namespace
        existing_validator = spec.inputs.validator

        def inputs_validator_wrapper(inputs, namespace):
            """Wrap the existing and custom input namespace validators."""
            if existing_validator:
                error = existing_validator(inputs, namespace)
                if error:
                    return error
            error = cls.validate_inputs_namespace(inputs, namespace)
            if error:
                return error
            return None

        spec.inputs.validator = inputs_validator_wrapper

        ## Calculation outputs
        spec.output(
            "spectrum",
            valid_type=ArrayData,
            required=False,
            help="Outcome energies and probabilities of a split, ranked by energy.",
        )
        spec.output(
            "zeros",
            valid_type=ArrayData,
            required=False,
            help="Zero events of the state with their residuals.",
        )
        spec.output(
            "delta_levels",
            valid_type=ArrayData,
            required=False,
            help="Levels of the well with a delta barrier against its strength.",
        )
        spec.output(
            "report",
            valid_type=Dict,
            required=False,
            help="Energy bookkeeping of a barrier-raising simulation.",
        )
        spec.output(
            "delta_kinetic",
            valid_type=Float,
            required=False,
            help="Kinetic energy change of a barrier-raising simulation.",
        )
        spec.output(
            "sweep",
            valid_type=ArrayData,
            required=False,
            help="One row per (state, duration, width) of a sweep.",
        )
        spec.output(
            "fits",
            valid_type=Dict,
            required=False,
            help="Fitted exponents of the sweep energies.",
        )
        spec.output(
            "carpet",
            valid_type=ArrayData,
            required=False,
            help="Density through an instantaneous split, with the norm per time.",
        )
        spec.output(
            "accounting",
            valid_type=ArrayData,
            required=False,
            help="Barrier energy per transition model and post-selected outcome.",
        )

        ## Metadata
        spec.inputs["metadata"]["options"]["resources"].default = {
            "num_machines": 1,
            "num_mpiprocs_per_machine": 1,
        }
        spec.inputs["metadata"]["options"]["parser_name"].default = "wellsplit"

        # Exit Codes
        spec.exit_code(
            300,
            "ERROR_STDOUT_NOT_FOUND",
            message="Error accessing the `output.log` wellsplit output file.",
        )
        spec.exit_code(
            301,
            "ERROR_OUTPUT_FILE_NOT_FOUND",
            message="wellsplit failed to produce the expected output file.",
        )
        spec.exit_code(
            302,
            "ERROR_CONFIGURATION_REJECTED",
            message="wellsplit rejected the run configuration.",
        )
        spec.exit_code(
            303,
            "ERROR_NUMERICAL_VALIDITY",
            message=(
                "wellsplit aborted the run because a numerical validity check "
                "failed."
            ),
        )
        spec.exit_code(
            304,
            "ERROR_UNTRUSTED_NORM",
            message=(
                "The simulation completed but its norm drift exceeds the trusted "
                "limit; outputs are stored but should not be relied on."
            ),
        )

        return

    @classmethod
    def validate_inputs_namespace(
        cls, value: dict, namespace: PortNamespace
    ) -> str | None:
        """Check that the run configuration carries what the task needs."""
        if "task" not in value or "parameters" not in value:
            return None
        if cls.validate_task(value["task"], None):
            return None
        task = Task[value["task"].value.upper()]
        try:
            RunConfig(value["parameters"].get_dict()).require(task)
        except ConfigError as exc:
            return str(exc)
        return None

    @classmethod
    def validate_task(cls, value: Str | None, _) -> str | None:
        """
        Validate the name of the task to run.

        Returns
        -------
        str | None
            Returns None if the task is known, otherwise an error message.
        """
        if value is None:
            return None
        valid_tasks = [task.name.lower() for task in Task]
        if value.value not in valid_tasks:
            return (
                f"The task '{value.value}' is invalid. "
                f"Valid tasks are: {', '.join(valid_tasks)}"
            )
        return None

    @classmethod
    def validate_caps(cls, value: List | None, _) -> str | None:
        """Validate the mode caps override."""
        if value is None:
            return None
        caps = value.get_list()
        if len(caps) != 2:
            return "The 'caps' input must hold exactly two values [l_max, k_max]."
        for cap in caps:
            if not isinstance(cap, int) or isinstance(cap, bool) or cap < 1:
                return "The 'caps' values must be positive integers."
        return None

    @property
    def task(self) -> Task:
        """The task run by this calculation."""
        return Task[self.inputs.task.value.upper()]

    def cmdline_params(self) -> list[str]:
        """Return the command line passed to the executable."""
        params = [
            self.inputs.task.value,
            "--config",
            WellSplitCalculation.FILE_CONFIG,
            "--out",
            ".",
        ]
        if "caps" in self.inputs:
            params += ["--caps", ",".join(str(c) for c in self.inputs.caps.get_list())]
        return params

    def prepare_for_submission(self, folder: Folder) -> CalcInfo:
        """
        Prepare the well-splitting calculation for submission.

        Params
        ------
        folder : Folder
            An `aiida.common.folders.Folder` specifying the temporary working
            directory for the calculation.

        Returns
        -------
        calcInfo : CalcInfo
            An `aiida.common.CalcInfo` instance.
        """
        with folder.open(WellSplitCalculation.FILE_CONFIG, "w") as f:
            json.dump(self.inputs.parameters.get_dict(), f, sort_keys=True, indent=2)

        # Define the AiiDA code parameters
        code_info = CodeInfo()
        code_info.code_uuid = self.inputs.code.uuid
        code_info.cmdline_params = self.cmdline_params()
        code_info.stdout_name = WellSplitCalculation.FILE_STDOUT
        code_info.stderr_name = WellSplitCalculation.FILE_STDERR

        # Setup the calculation information object
        calc_info = CalcInfo()
        calc_info.codes_info = [code_info]
        calc_info.retrieve_temporary_list = list(
            WellSplitCalculation.TASK_FILES[self.task]
        )
        calc_info.provenance_exclude_list = []
        calc_info.retrieve_list = [
            WellSplitCalculation.FILE_STDOUT,
            WellSplitCalculation.FILE_STDERR,
        ]
        calc_info.local_copy_list = []

        return calc_info
