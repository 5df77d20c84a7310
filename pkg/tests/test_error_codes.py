"""Tests for input validation and error codes on failed jobs."""

import math

import numpy
import pytest
from aiida.engine import run

from aiida_wellsplit.calculations.base import WellSplitCalculation
from aiida_wellsplit.parsers.base import finite, read_columns


def test_task_validation(generate_calcjob, generate_inputs):
    """Test the validation of the task input."""
    inputs = generate_inputs(task="split")
    try:
        generate_calcjob(WellSplitCalculation, inputs)
    except ValueError as e:
        assert "The task 'split' is invalid." in str(e)
    except Exception as e:
        raise AssertionError(
            f"Wrong error caught during task validation: {str(e)}"
        ) from e
    else:
        raise AssertionError("No error caught when providing an invalid task.")


def test_parameters_validation(generate_calcjob, generate_inputs, load_config):
    """Test the validation of the run configuration."""
    parameters = load_config()
    parameters["split"]["barriers"] = [0.5]
    try:
        generate_calcjob(WellSplitCalculation, generate_inputs(parameters=parameters))
    except ValueError as e:
        assert "parameter keys are invalid: barriers" in str(e)
    except Exception as e:
        raise AssertionError(
            f"Wrong error caught during parameter validation: {str(e)}"
        ) from e
    else:
        raise AssertionError("No error caught for an invalid split key.")

    parameters = load_config()
    parameters["length"] = "1.0"
    try:
        generate_calcjob(WellSplitCalculation, generate_inputs(parameters=parameters))
    except ValueError as e:
        assert "must be of type float" in str(e)
    except Exception as e:
        raise AssertionError(
            f"Wrong error caught during parameter validation: {str(e)}"
        ) from e
    else:
        raise AssertionError("No error caught for a string well length.")


def test_missing_section_validation(generate_calcjob, generate_inputs):
    """Test the co-validation of the task and the run configuration."""
    inputs = generate_inputs(
        task="simulate", parameters={"state": {"kind": "eigen", "l": 1}}
    )
    try:
        generate_calcjob(WellSplitCalculation, inputs)
    except ValueError as e:
        assert "Section required by 'simulate' is missing." in str(e)
    except Exception as e:
        raise AssertionError(
            f"Wrong error caught during task co-validation: {str(e)}"
        ) from e
    else:
        raise AssertionError("No error caught for a missing ramp section.")


@pytest.mark.parametrize("caps", [[200], [200, 0], [200, 1.5]])
def test_caps_validation(generate_calcjob, generate_inputs, caps):
    """Test the validation of the mode caps override."""
    try:
        generate_calcjob(WellSplitCalculation, generate_inputs(caps=caps))
    except ValueError as e:
        assert "'caps'" in str(e)
    except Exception as e:
        raise AssertionError(
            f"Wrong error caught during caps validation: {str(e)}"
        ) from e
    else:
        raise AssertionError(f"No error caught for caps {caps}.")


def test_read_columns(tmp_path):
    """Test the column types read back from an output table."""
    path = tmp_path / "table.csv"
    path.write_text("model,j,p,aborted\nweak,1,0.25,false\nmixed,2,nan,true\n")
    columns = read_columns(path)
    assert list(columns["model"]) == ["weak", "mixed"]
    assert numpy.array_equal(columns["j"], [1.0, 2.0])
    assert math.isnan(columns["p"][1])
    assert columns["aborted"].dtype == bool
    assert list(columns["aborted"]) == [False, True]

    path.write_text("x,t\n")
    assert all(len(v) == 0 for v in read_columns(path).values())


def test_finite():
    """Test that non-finite floats are replaced for node storage."""
    content = {"a": math.nan, "b": [1.0, math.inf], "c": {"d": 2}, "e": "text"}
    assert finite(content) == {"a": None, "b": [1.0, None], "c": {"d": 2}, "e": "text"}


@pytest.mark.needs_executable
def test_configuration_rejected(generate_inputs, load_config):
    """Test the exit code for a configuration rejected by the executable."""
    parameters = load_config()
    parameters["split"]["positions"] = [0.6, 0.4]
    inputs = generate_inputs(parameters=parameters)
    _, node = run.get_node(WellSplitCalculation, **inputs)
    assert node.exit_status == 302, f"Unexpected exit status {node.exit_status}"


@pytest.mark.needs_executable
def test_numerical_validity_abort(generate_inputs, load_config):
    """Test the exit code for a simulation that leaves its validity regime."""
    parameters = load_config("barrier_ramp.json")
    parameters["ramp"]["peak"] = 1e12
    parameters["simulation"] = {"steps": 10}
    inputs = generate_inputs(task="simulate", parameters=parameters)
    _, node = run.get_node(WellSplitCalculation, **inputs)
    assert node.exit_status == 303, f"Unexpected exit status {node.exit_status}"
