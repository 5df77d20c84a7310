"""Defines the calculation parsers for the well-splitting AiiDA plugin."""

import csv
import json
import math
from pathlib import Path

import numpy
from aiida.engine import ExitCode
from aiida.orm import ArrayData, Dict, Float
from aiida.parsers.parser import Parser

from aiida_wellsplit import cli
from aiida_wellsplit.calculations.base import WellSplitCalculation
from aiida_wellsplit.utils import Task

PREFIX_CONFIG = "config error:"
PREFIX_NUMERICAL = "numerical validity abort:"


def finite(value):
    """Replace non-finite floats, which node attributes cannot store, by None."""
    if isinstance(value, dict):
        return {key: finite(val) for key, val in value.items()}
    if isinstance(value, list | tuple):
        return [finite(val) for val in value]
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _column(values: list[str]) -> numpy.ndarray:
    if all(v in ("true", "false") for v in values):
        return numpy.array([v == "true" for v in values])
    try:
        return numpy.array([float(v) for v in values])
    except ValueError:
        return numpy.array(values)


def read_columns(path: Path) -> dict[str, numpy.ndarray]:
    """Read a CSV file written by the executable into one array per column."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = list(reader)
    columns = list(zip(*rows)) if rows else [() for _ in header]
    return {name: _column(list(col)) for name, col in zip(header, columns)}


class WellSplitParser(Parser):
    """AiiDA parser plugin for well-splitting calculations."""

    OUTPUT_LABELS = {
        "spectrum": "Interference Spectrum",
        "zeros": "Zero Events",
        "delta_levels": "Delta Barrier Levels",
        "sweep": "Barrier Sweep",
        "accounting": "Barrier Energy Accounting",
    }

    def parse(self, **kwargs):
        """Parse the output of a well-splitting calculation."""
        retrieved_tmp_folder = Path(kwargs.get("retrieved_temporary_folder", ""))

        names = self.retrieved.list_object_names()
        if WellSplitCalculation.FILE_STDOUT not in names:
            return self.exit_codes.ERROR_STDOUT_NOT_FOUND
        if WellSplitCalculation.FILE_STDERR in names:
            stderr = self.retrieved.get_object_content(
                WellSplitCalculation.FILE_STDERR, "r"
            )
            for line in stderr.splitlines():
                if line.startswith(PREFIX_CONFIG):
                    self.logger.error(line)
                    return self.exit_codes.ERROR_CONFIGURATION_REJECTED
                if line.startswith(PREFIX_NUMERICAL):
                    self.logger.error(line)
                    return self.exit_codes.ERROR_NUMERICAL_VALIDITY

        task = self.node.inputs.task.value
        for filename in WellSplitCalculation.TASK_FILES[Task[task.upper()]]:
            if not (retrieved_tmp_folder / filename).exists():
                return self.exit_codes.ERROR_OUTPUT_FILE_NOT_FOUND

        return getattr(self, f"parse_{task}")(retrieved_tmp_folder)

    def _table(self, path: Path, link: str) -> None:
        table = ArrayData(label=self.OUTPUT_LABELS[link])
        for name, array in read_columns(path).items():
            table.set_array(name, array)
        self.out(link, table)

    def parse_spectrum(self, folder: Path) -> ExitCode:
        """Store the ranked outcome table."""
        self._table(folder / cli.FILE_SPECTRUM, "spectrum")
        return ExitCode(0)

    def parse_zeros(self, folder: Path) -> ExitCode:
        """Store the zero events."""
        self._table(folder / cli.FILE_ZEROS, "zeros")
        return ExitCode(0)

    def parse_delta(self, folder: Path) -> ExitCode:
        """Store the delta-barrier levels against the barrier strength."""
        self._table(folder / cli.FILE_DELTA, "delta_levels")
        return ExitCode(0)

    def parse_accounting(self, folder: Path) -> ExitCode:
        """Store the barrier energy table."""
        self._table(folder / cli.FILE_ACCOUNTING, "accounting")
        return ExitCode(0)

    def parse_sweep(self, folder: Path) -> ExitCode:
        """Store the sweep table and its fitted exponents."""
        self._table(folder / cli.FILE_SWEEP, "sweep")
        with open(folder / cli.FILE_FITS, "rb") as f:
            fits = json.loads(f.read())
        self.out("fits", Dict(finite(fits), label="Sweep Exponents"))
        return ExitCode(0)

    def parse_simulate(self, folder: Path) -> ExitCode:
        """Store the simulation report and flag an untrusted norm."""
        with open(folder / cli.FILE_REPORT, "rb") as f:
            report = json.loads(f.read())
        self.out("report", Dict(finite(report), label="Barrier Ramp Report"))
        self.out("delta_kinetic", Float(report["dK"], label="Kinetic Energy Change"))
        if not report.get("trusted", False):
            return self.exit_codes.ERROR_UNTRUSTED_NORM
        return ExitCode(0)

    def parse_carpet(self, folder: Path) -> ExitCode:
        """Store the density grid of an instantaneous split."""
        with open(folder / cli.FILE_CARPET, newline="") as f:
            reader = csv.reader(f)
            header = next(reader)
            rows = numpy.array([[float(v) for v in row] for row in reader])
        carpet = ArrayData(label="Quantum Carpet")
        carpet.set_array("x", numpy.array([float(v) for v in header[2:]]))
        carpet.set_array("t", rows[:, 0])
        carpet.set_array("norm", rows[:, 1])
        carpet.set_array("density", rows[:, 2:])
        self.out("carpet", carpet)
        return ExitCode(0)
