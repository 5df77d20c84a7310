"""Tests for the job files and command line generated from the calculation inputs."""

import json

from aiida_wellsplit import cli
from aiida_wellsplit.calculations.base import WellSplitCalculation


def test_defaults(generate_calcjob, load_config):
    """Test the default spectrum job."""
    tmp_pth, calc_info = generate_calcjob(WellSplitCalculation)

    assert calc_info.retrieve_list == [
        WellSplitCalculation.FILE_STDOUT,
        WellSplitCalculation.FILE_STDERR,
    ]
    assert calc_info.retrieve_temporary_list == [cli.FILE_SPECTRUM]

    code_info = calc_info.codes_info[0]
    assert code_info.cmdline_params == [
        "spectrum",
        "--config",
        WellSplitCalculation.FILE_CONFIG,
        "--out",
        ".",
    ]
    assert code_info.stdout_name == WellSplitCalculation.FILE_STDOUT
    assert code_info.stderr_name == WellSplitCalculation.FILE_STDERR

    config_file = tmp_pth / WellSplitCalculation.FILE_CONFIG
    assert config_file.exists()
    assert json.loads(config_file.read_text()) == load_config()


def test_caps_override(generate_calcjob, generate_inputs):
    """Test that the mode caps are passed on the command line."""
    inputs = generate_inputs(task="accounting", caps=[120, 80])
    _, calc_info = generate_calcjob(WellSplitCalculation, inputs)

    params = calc_info.codes_info[0].cmdline_params
    assert params[0] == "accounting"
    assert params[-2:] == ["--caps", "120,80"]
    assert calc_info.retrieve_temporary_list == [cli.FILE_ACCOUNTING]


def test_task_files(generate_calcjob, generate_inputs, load_config):
    """Test the files retrieved for each task."""
    expected = {
        "zeros": [cli.FILE_ZEROS],
        "delta": [cli.FILE_DELTA],
        "carpet": [cli.FILE_CARPET],
        "simulate": [cli.FILE_REPORT],
        "sweep": [cli.FILE_SWEEP, cli.FILE_FITS],
    }
    parameters = {
        "simulate": load_config("barrier_ramp.json"),
        "sweep": load_config("barrier_sweep.json"),
    }
    for task, files in expected.items():
        inputs = generate_inputs(task=task, parameters=parameters.get(task))
        _, calc_info = generate_calcjob(WellSplitCalculation, inputs)
        assert calc_info.retrieve_temporary_list == files, (
            f"Wrong retrieved files for task '{task}'."
        )
        assert calc_info.codes_info[0].cmdline_params[0] == task


def test_task_property(generate_calcjob, generate_inputs):
    """Test the task resolved from the calculation inputs."""
    process = generate_calcjob(
        WellSplitCalculation, generate_inputs(task="zeros"), return_process=True
    )
    assert process.task.name == "ZEROS"
    assert process.cmdline_params()[:3] == ["zeros", "--config", "config.json"]
