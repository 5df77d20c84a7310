"""Tests for the barrier sweep workflow and its collation step."""

import numpy
import pytest
from aiida.engine import run_get_node
from aiida.orm import Dict

from aiida_wellsplit.calculations.utils import collate_sweep, row_from_report
from aiida_wellsplit.workflows.sweep import BarrierSweepWorkChain


def _report(tau: float, w: float, trusted: bool = True) -> dict:
    trace = []
    for step in range(1, 11):
        t = 0.1 * step * tau
        v = 1e4 * t / tau
        trace.append(
            {
                "t": t,
                "v": v,
                "delta_k": 2.0 * tau**2 * v**4 / w**3,
                "delta_v_dpsi": -3.0 * tau**2 * v**4.3 / w**2.3,
            }
        )
    return {
        "tau": tau,
        "w": w,
        "V_m": 1e4,
        "A_w": 2.0,
        "dK": trace[-1]["delta_k"],
        "dV_dpsi": None,
        "dV_psi0": 2e4,
        "norm_err": 1e-12,
        "trusted": trusted,
        "trace": trace,
    }


def test_row_from_report():
    """Test that a stored report is turned back into a sweep row."""
    row = row_from_report("minus", _report(1e-6, 2e-3))
    assert row.state_id == "minus"
    assert row.tau == 1e-6
    assert numpy.isnan(row.delta_v_dpsi)
    assert len(row.trace) == 10
    assert row.trace[0].v == pytest.approx(1e3)


def _points(reports: dict, state_id: str = "minus") -> dict:
    return {
        key: {
            "state_id": state_id,
            "tau": report["tau"],
            "w": report["w"],
            "V_m": report["V_m"],
        }
        for key, report in reports.items()
    }


def test_collate_sweep():
    """Test the collation of simulate reports into a table and its fit."""
    contents = {
        f"run_{i}": _report(tau, w)
        for i, (tau, w) in enumerate(
            (tau, w) for tau in (1e-6, 3e-6) for w in (2e-3, 5e-3)
        )
    }
    reports = {key: Dict(report) for key, report in contents.items()}
    results = collate_sweep(Dict(_points(contents)), **reports)

    table = results["sweep"]
    assert list(table.get_array("state_id")) == ["minus"] * 4
    assert numpy.allclose(table.get_array("tau"), [1e-6, 1e-6, 3e-6, 3e-6])
    assert numpy.all(numpy.isnan(table.get_array("dV_dpsi")))
    assert not table.get_array("aborted").any()
    assert table.get_array("trusted").all()

    fits = results["fits"].get_dict()
    assert abs(fits["k_exponents"]["tau"] - 2.0) < 1e-8
    assert abs(fits["k_exponents"]["w"] + 3.0) < 1e-8


def test_collate_sweep_row_order():
    """Test that rows follow the numeric order of the run keys."""
    contents = {f"run_{i}": _report(1e-6 * (i + 1), 2e-3) for i in range(12)}
    reports = {key: Dict(report) for key, report in contents.items()}
    table = collate_sweep(Dict(_points(contents)), **reports)["sweep"]
    expected = [1e-6 * (i + 1) for i in range(12)]
    assert numpy.allclose(table.get_array("tau"), expected), "Rows out of order."


def test_collate_sweep_flags_failed_runs():
    """Test that failed and untrusted runs stay in the table but not in the fit."""
    contents = {
        f"run_{i}": _report(tau, w)
        for i, (tau, w) in enumerate(
            (tau, w) for tau in (1e-6, 3e-6) for w in (2e-3, 5e-3)
        )
    }
    contents["run_4"] = _report(5e-6, 2e-3, trusted=False)
    contents["run_4"]["dK"] = 1e30
    points = _points(contents)
    points["run_5"] = {"state_id": "plus", "tau": 5e-6, "w": 5e-3, "V_m": 1e4}
    points["run_5"]["exit_status"] = 303
    reports = {key: Dict(report) for key, report in contents.items()}
    results = collate_sweep(Dict(points), **reports)

    table = results["sweep"]
    assert table.get_shape("tau") == (6,)
    assert list(table.get_array("aborted")) == [False] * 5 + [True]
    assert list(table.get_array("trusted")) == [True] * 4 + [False, False]
    assert table.get_array("state_id")[-1] == "plus"
    assert numpy.isnan(table.get_array("dK")[-1])
    assert table.get_array("tau")[-1] == 5e-6

    fits = results["fits"].get_dict()
    trusted = {key: contents[key] for key in list(contents)[:4]}
    reference = collate_sweep(
        Dict(_points(trusted)), **{key: Dict(c) for key, c in trusted.items()}
    )["fits"].get_dict()
    assert fits["n_points"] == reference["n_points"], "Flagged rows entered the fit."
    assert abs(fits["k_exponents"]["tau"] - 2.0) < 1e-8


def test_collate_sweep_missing_point():
    """Test that every report needs a sweep point."""
    try:
        collate_sweep(Dict({}), run_0=Dict(_report(1e-6, 2e-3)))
    except ValueError as e:
        assert "run_0" in str(e)
    else:
        raise AssertionError("No error caught for a report without a sweep point.")


@pytest.mark.needs_executable
def test_barrier_sweep_workflow(wellsplit_code, load_config):
    """Test a sweep over two states and two durations."""
    inputs = {
        "code": wellsplit_code(),
        "parameters": Dict(load_config("barrier_sweep.json")),
    }
    results, node = run_get_node(BarrierSweepWorkChain, **inputs)

    assert node.is_finished_ok, f"WorkChain failed with exit status {node.exit_status}"
    assert len(node.called) == 5, "Expected four simulate runs and one collation."

    table = results["sweep"]
    assert table.get_shape("tau") == (4,)
    assert sorted(table.get_array("state_id")) == ["minus", "minus", "plus", "plus"]
    assert numpy.all(table.get_array("norm_err") < 1e-6)
    assert not table.get_array("aborted").any()


@pytest.mark.needs_executable
def test_empty_sweep(wellsplit_code):
    """Test the exit code of a sweep without durations."""
    parameters = {
        "sweep": {"states": {"minus": {"kind": "alpha", "x0": 0.375}}, "taus": []}
    }
    inputs = {"code": wellsplit_code(), "parameters": Dict(parameters)}
    _, node = run_get_node(BarrierSweepWorkChain, **inputs)
    assert node.exit_status == 350
