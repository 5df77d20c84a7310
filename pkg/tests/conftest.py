"""PyTest configurations."""

import json
import os
import pathlib
import shutil

import pytest
from aiida.common.folders import Folder
from aiida.engine import CalcJob
from aiida.engine.utils import instantiate_process
from aiida.manage.manager import get_manager
from aiida.orm import Dict, InstalledCode, List, Str

pytest_plugins = "aiida.tools.pytest_fixtures"


def wellsplit_executable() -> str | None:
    """Return the path of the wellsplit executable, if one is available."""
    return os.environ.get("WELLSPLIT_BIN") or shutil.which("wellsplit")


def pytest_configure(config):
    """Register the custom markers of the test suite."""
    config.addinivalue_line(
        "markers",
        "full_scale: production-size run, only with WELLSPLIT_FULL_SCALE=1",
    )
    config.addinivalue_line(
        "markers",
        "needs_executable: runs the installed wellsplit executable through AiiDA",
    )


def pytest_runtest_setup(item):
    """Skip the marked tests whose requirements are not met."""
    if item.get_closest_marker("full_scale"):
        if os.environ.get("WELLSPLIT_FULL_SCALE", "0") != "1":
            pytest.skip("Full-scale run; set WELLSPLIT_FULL_SCALE=1 to enable.")
    if item.get_closest_marker("needs_executable"):
        if wellsplit_executable() is None:
            pytest.skip("The wellsplit executable is not available.")


@pytest.fixture
def get_data_filepath() -> pathlib.Path:
    """Return the path to the tests data folder."""
    return pathlib.Path(__file__).resolve().parent / "data"


@pytest.fixture
def load_config(get_data_filepath):
    """Return the content of a JSON run configuration from the data folder."""

    def factory(fname: str = "alpha_split.json") -> dict:
        with open(get_data_filepath / fname) as f:
            return json.load(f)

    return factory


@pytest.fixture
def write_config(tmp_path):
    """Write a run configuration to a temporary file and return its path."""

    def factory(content: dict, fname: str = "run.json") -> pathlib.Path:
        path = tmp_path / fname
        path.write_text(json.dumps(content))
        return path

    return factory


@pytest.fixture
def wellsplit_code(aiida_code_installed):
    """Return a wellsplit AiiDA code instance."""

    def factory() -> InstalledCode:
        return aiida_code_installed(
            filepath_executable=wellsplit_executable() or "wellsplit",
            default_calc_job_plugin="wellsplit",
        )

    return factory


@pytest.fixture
def generate_inputs(wellsplit_code, load_config):
    """Return a dictionary of inputs for the WellSplitCalculation."""

    def factory(
        task: str = "spectrum",
        parameters: dict | None = None,
        caps: list | None = None,
    ) -> dict:
        inputs = {
            "code": wellsplit_code(),
            "task": Str(task),
            "parameters": Dict(load_config() if parameters is None else parameters),
        }
        if caps is not None:
            inputs["caps"] = List(caps)
        return inputs

    return factory


@pytest.fixture
def generate_calcjob(tmp_path, generate_inputs):
    """Return an initialised aiida-wellsplit CalcJob instance."""

    def factory(process_class: CalcJob, inputs=None, return_process=False):
        inputs = generate_inputs() if inputs is None else inputs
        manager = get_manager()
        runner = manager.get_runner()
        process = instantiate_process(runner, process_class, **inputs)

        if return_process:
            return process

        calc_info = process.prepare_for_submission(Folder(tmp_path))
        return tmp_path, calc_info

    return factory
