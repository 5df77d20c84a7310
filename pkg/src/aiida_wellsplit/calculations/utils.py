"""A collection of smaller utility AiiDA CalcFunctions."""

import math

import numpy
from aiida.engine import calcfunction
from aiida.orm import ArrayData, Dict

from aiida_wellsplit.exceptions import DomainError
from aiida_wellsplit.parsers.base import finite
from aiida_wellsplit.tdse import SweepRow, TracePoint, fit_sweep

SWEEP_COLUMNS = ("tau", "w", "V_m", "A_w", "dK", "dV_dpsi", "dV_psi0", "norm_err")


def _value(report: dict, key: str) -> float:
    value = report.get(key)
    return numpy.nan if value is None else float(value)


def run_order(key: str) -> tuple[float, str]:
    """Sort key placing ``run_2`` before ``run_10``."""
    suffix = key.rpartition("_")[2]
    return (int(suffix) if suffix.isdigit() else math.inf, key)


def row_from_report(state_id: str, report: dict) -> SweepRow:
    """Rebuild a sweep row from the report of one simulate calculation."""
    return SweepRow(
        state_id,
        _value(report, "tau"),
        _value(report, "w"),
        _value(report, "V_m"),
        a_w=_value(report, "A_w"),
        delta_k=_value(report, "dK"),
        delta_v_dpsi=_value(report, "dV_dpsi"),
        delta_v_psi0=_value(report, "dV_psi0"),
        norm_error=_value(report, "norm_err"),
        trace=tuple(TracePoint(**point) for point in report.get("trace", [])),
    )


def _failed_row(point: dict) -> SweepRow:
    status = point.get("exit_status")
    return SweepRow(
        point["state_id"],
        _value(point, "tau"),
        _value(point, "w"),
        _value(point, "V_m"),
        aborted=True,
        message=f"simulate run failed with exit status {status}",
    )


@calcfunction
def collate_sweep(points: Dict, **reports) -> dict:
    """
    Collate the reports of a series of simulate calculations into a sweep.

    ``points`` maps every run key to its sweep point (``state_id``, ``tau``,
    ``w``, ``V_m``). Runs without a report become aborted rows; runs whose
    report is untrusted are kept in the table with ``trusted`` False. Both are
    left out of the fit.
    """
    points = points.get_dict()
    missing = set(reports).difference(points)
    if missing:
        raise ValueError(f"Reports without a sweep point: {', '.join(sorted(missing))}")
    if not reports:
        raise ValueError("At least one report is needed to collate a sweep.")

    keys = sorted(points, key=run_order)
    contents = {key: reports[key].get_dict() for key in keys if key in reports}
    rows, trusted = [], []
    for key in keys:
        if key in contents:
            rows.append(row_from_report(points[key]["state_id"], contents[key]))
            trusted.append(bool(contents[key].get("trusted", True)))
        else:
            rows.append(_failed_row(points[key]))
            trusted.append(False)

    table = ArrayData(label="Barrier Sweep")
    table.set_array("state_id", numpy.array([row.state_id for row in rows]))
    for column in SWEEP_COLUMNS:
        values = [_value(contents.get(key, points[key]), column) for key in keys]
        table.set_array(column, numpy.array(values, dtype=float))
    table.set_array("aborted", numpy.array([row.aborted for row in rows]))
    table.set_array("trusted", numpy.array(trusted))

    fit_rows = [row for row, ok in zip(rows, trusted, strict=True) if ok]
    try:
        fit = fit_sweep(fit_rows).to_dict()
    except DomainError:
        fit = {}
    return {"sweep": table, "fits": Dict(finite(fit), label="Sweep Exponents")}
