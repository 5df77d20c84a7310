"""
Command-line interface of the well-splitting library.

Usage:
    wellsplit spectrum --config run.json --out results/
    wellsplit zeros --config run.json
    wellsplit delta --config run.json
    wellsplit simulate --config run.json
    wellsplit sweep --config run.json --jobs 4
    wellsplit carpet --config run.json
    wellsplit accounting --config run.json --caps 200,200
"""

import csv
import json
import logging
import sys
from pathlib import Path

import click
import numpy

from aiida_wellsplit import __version__
from aiida_wellsplit.accounting import accounting_table
from aiida_wellsplit.config import RunConfig
from aiida_wellsplit.deltasolver import delta_sweep
from aiida_wellsplit.exceptions import ConfigError, DomainError, WellSplitError
from aiida_wellsplit.splitter import carpet, outcome_probabilities
from aiida_wellsplit.tdse import fit_predict, simulate, sweep
from aiida_wellsplit.units import Units
from aiida_wellsplit.utils import LOGGER, Task, format_float
from aiida_wellsplit.wellcore import revival_period
from aiida_wellsplit.zerofinder import zero_events, zeros_at_time

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

FILE_SPECTRUM = "spectrum.csv"
FILE_ZEROS = "zeros.csv"
FILE_DELTA = "delta_sweep.csv"
FILE_REPORT = "report.json"
FILE_SWEEP = "sweep.csv"
FILE_FITS = "fits.json"
FILE_CARPET = "carpet.csv"
FILE_ACCOUNTING = "accounting.csv"

SWEEP_COLUMNS = (
    "state_id",
    "tau",
    "w",
    "V_m",
    "A_w",
    "dK",
    "dV_dpsi",
    "dV_psi0",
    "norm_err",
    "aborted",
)


def _cell(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float | numpy.floating):
        return format_float(value)
    return str(value)


def write_csv(path: Path, header, rows) -> None:
    """Write rows with a one-line header and 17-significant-digit floats."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(value) for value in row])


def write_json(path: Path, content: dict) -> None:
    """Write a JSON report with sorted keys."""
    with open(path, "w") as f:
        json.dump(content, f, sort_keys=True, indent=2)
        f.write("\n")


def _parse_caps(ctx, param, value: str | None) -> tuple[int, int] | None:
    if value is None:
        return None
    try:
        l_max, k_max = (int(v) for v in value.split(","))
    except ValueError as exc:
        raise click.BadParameter("expected L_MAX,K_MAX, e.g. 200,200") from exc
    if l_max < 1 or k_max < 1:
        raise click.BadParameter("mode caps must be positive")
    return l_max, k_max


COMMON_OPTIONS = (
    click.option(
        "--config",
        "config_path",
        required=True,
        type=click.Path(dir_okay=False),
        help="JSON run configuration.",
    ),
    click.option(
        "--out",
        "out_dir",
        default=".",
        type=click.Path(file_okay=False),
        help="Directory for the output files.",
    ),
    click.option(
        "--caps",
        callback=_parse_caps,
        default=None,
        metavar="L_MAX,K_MAX",
        help="Mode caps of the change of basis.",
    ),
    click.option("--verbose", "-v", is_flag=True, help="Log progress at INFO level."),
)


def _common_options(func):
    for option in reversed(COMMON_OPTIONS):
        func = option(func)
    return func


def _run(task: Task, config_path: str, out_dir: str, verbose: bool, action) -> None:
    """Load the configuration, run one task and map failures to exit codes."""
    if verbose:
        LOGGER.setLevel(logging.INFO)
        if not LOGGER.handlers:
            LOGGER.addHandler(logging.StreamHandler(sys.stderr))
    try:
        config = RunConfig.from_file(config_path)
        config.require(task)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        action(config, out)
    except (ConfigError, DomainError) as e:
        click.echo(f"config error: {e}", err=True)
        sys.exit(EXIT_CONFIG)
    except WellSplitError as e:
        click.echo(f"numerical validity abort: {e}", err=True)
        sys.exit(EXIT_NUMERICAL)


@click.group()
@click.version_option(version=__version__, prog_name="wellsplit")
def cli():
    """Split an infinite square well at the zeros of its wavefunction."""


@cli.command()
@_common_options
def spectrum(config_path, out_dir, caps, verbose):
    """Interference spectrum and outcome probabilities of a split."""

    def action(config: RunConfig, out: Path) -> None:
        state = config.build_state()
        table = outcome_probabilities(
            state, config.split_config(), config.caps(caps), config.split_time
        )
        rows = [(row.j, row.k, row.energy, row.probability) for row in table]
        write_csv(out / FILE_SPECTRUM, ("j", "k", "energy", "probability"), rows)
        click.echo(f"{'j':>3} {'k':>4} {'E / pi^2':>14} {'P':>14}")
        for j, k, energy, prob in rows[:10]:
            click.echo(f"{j:>3} {k:>4} {Units.to_pi2(energy):>14.6f} {prob:>14.6e}")
        click.echo(f"total {table.total:.12f}  tail {table.tail:.3e}")

    _run(Task.SPECTRUM, config_path, out_dir, verbose, action)


@cli.command()
@_common_options
def zeros(config_path, out_dir, caps, verbose):
    """Stationary and transient zeros of the state."""

    def action(config: RunConfig, out: Path) -> None:
        state = config.build_state()
        options = config.section("zeros")
        tol = float(options.get("tol", 1e-10))
        n_x, n_t = options.get("grid", [1024, 512])
        if "window" in options:
            scan = zero_events(state, tuple(options["window"]), (n_x, n_t), tol)
        else:
            scan = zeros_at_time(state, float(options.get("time", 0.0)), n_x, tol)
        rows = [(e.x, e.t, e.kind.name.lower(), e.residual) for e in scan]
        write_csv(out / FILE_ZEROS, ("x", "t", "kind", "residual"), rows)
        click.echo(f"{len(rows)} zero events, {scan.dropped} candidates dropped")

    _run(Task.ZEROS, config_path, out_dir, verbose, action)


@cli.command()
@_common_options
def delta(config_path, out_dir, caps, verbose):
    """Spectrum of the well with a delta barrier across barrier strengths."""

    def action(config: RunConfig, out: Path) -> None:
        options = config.section("delta")
        x0 = float(options.get("x0", 0.375 * config.length))
        v_grid = options.get("v_grid", [0.0, *numpy.logspace(0, 10, 21).tolist()])
        count = int(options.get("levels", 10))
        rows = [
            (spec.V, level.index, level.k, level.energy, level.p_left)
            for spec in delta_sweep(x0, v_grid, count, config.length)
            for level in spec
        ]
        write_csv(out / FILE_DELTA, ("V", "level", "k", "energy", "p_left"), rows)
        click.echo(f"{len(v_grid)} barrier strengths, {count} levels each")

    _run(Task.DELTA, config_path, out_dir, verbose, action)


@cli.command("simulate")
@_common_options
def simulate_command(config_path, out_dir, caps, verbose):
    """Raise a Gaussian barrier on the state and book the energy changes."""

    def action(config: RunConfig, out: Path) -> None:
        ramp = config.ramp()
        state, mesh = config.build_state(), config.mesh()
        report = simulate(state, ramp, mesh, **config.simulation())
        content = report.to_dict()
        prediction = fit_predict(ramp.duration, ramp.width, report.a_w, ramp.peak)
        content["fit"] = {
            "dK": prediction.delta_k,
            "dV": prediction.delta_v,
            "extrapolated": prediction.extrapolated,
        }
        write_json(out / FILE_REPORT, content)
        click.echo(
            f"dK/K0 = {report.delta_k / report.k0:.4e}  "
            f"dV_dpsi/K0 = {report.delta_v_dpsi / report.k0:.4e}  "
            f"norm error = {report.norm_error:.2e}"
        )

    _run(Task.SIMULATE, config_path, out_dir, verbose, action)


@cli.command("sweep")
@_common_options
@click.option("--jobs", "-j", default=1, type=click.IntRange(min=1), help="Workers.")
def sweep_command(config_path, out_dir, caps, verbose, jobs):
    """Run the barrier ramp over a grid of states, durations and widths."""

    def action(config: RunConfig, out: Path) -> None:
        options = config.section("sweep")
        for key in ("taus", "widths"):
            if not options.get(key):
                raise ConfigError(f"sweep.{key}", "At least one value is required.")
        simulation = config.simulation()
        result = sweep(
            config.sweep_states(),
            options["taus"],
            options["widths"],
            config.mesh(),
            peak=float(options.get("peak", 1e4)),
            center=float(config.section("ramp").get("center", 0.375 * config.length)),
            n_steps=simulation["n_steps"],
            trace_every=simulation["trace_every"],
            jobs=jobs,
        )
        rows = [
            (
                row.state_id,
                row.tau,
                row.w,
                row.v_m,
                row.a_w,
                row.delta_k,
                row.delta_v_dpsi,
                row.delta_v_psi0,
                row.norm_error,
                row.aborted,
            )
            for row in result.rows
        ]
        write_csv(out / FILE_SWEEP, SWEEP_COLUMNS, rows)
        write_json(out / FILE_FITS, result.fit.to_dict() if result.fit else {})
        failed = sum(row.aborted for row in result.rows)
        click.echo(f"{len(rows)} runs, {failed} aborted")

    _run(Task.SWEEP, config_path, out_dir, verbose, action)


@cli.command("carpet")
@_common_options
def carpet_command(config_path, out_dir, caps, verbose):
    """Sample |Psi(x, t)|^2 through an instantaneous split."""

    def action(config: RunConfig, out: Path) -> None:
        state = config.build_state()
        options = config.section("carpet")
        t_split = options.get("t_split", revival_period(state) or 0.0)
        t_end = float(options.get("t_end", 2.0 * t_split or 1.0))
        x = numpy.linspace(0.0, config.length, int(options.get("x_points", 256)))
        t = numpy.linspace(0.0, t_end, int(options.get("t_points", 128)))
        result = carpet(
            state, config.split_config(), float(t_split), x, t, config.caps(caps)
        )
        header = ["t", "norm", *(format_float(v) for v in result.x)]
        rows = (
            [time, norm, *density]
            for time, norm, density in zip(result.t, result.norms, result.density)
        )
        write_csv(out / FILE_CARPET, header, rows)
        click.echo(f"post-split norm defect {result.defect:.3e}")

    _run(Task.CARPET, config_path, out_dir, verbose, action)


@cli.command()
@_common_options
def accounting(config_path, out_dir, caps, verbose):
    """Barrier energy of post-selected outcomes under each transition model."""

    def action(config: RunConfig, out: Path) -> None:
        state = config.build_state()
        outcomes = config.section("accounting").get("outcomes", [[1, 1]])
        rows = accounting_table(
            state,
            config.split_config(),
            [tuple(o) for o in outcomes],
            config.models(),
            config.caps(caps)[0],
        )
        write_csv(
            out / FILE_ACCOUNTING,
            ("model", "j", "k", "probability", "barrier_energy"),
            [
                (r.model.name.lower(), r.j, r.k, r.probability, r.barrier_energy)
                for r in rows
            ],
        )
        for r in rows:
            click.echo(
                f"{r.model.name.lower():>8} ({r.j}, {r.k}) "
                f"<E^B> = {Units.to_ground_units(r.barrier_energy, config.length):+.4f}"
                " E0(1)"
            )

    _run(Task.ACCOUNTING, config_path, out_dir, verbose, action)
