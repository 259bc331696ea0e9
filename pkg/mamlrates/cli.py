"""CLI interface for mamlrates using Click.

Wraps the core engine for batch figure reproduction, theory checks and
moment validation.

Exit codes: 0 success, 1 invalid input, 2 tolerance failure, 3 numerical
failure.
"""

import logging
import sys
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path

import click
import yaml

from mamlrates.core import Experiment
from mamlrates.errors import DiscardBudgetError
from mamlrates.export.csv_export import (
    sweep_to_csv,
    theory_curve_to_csv,
    write_sweep_csv,
)
from mamlrates.export.json_export import report_to_json
from mamlrates.models import MomentCheck
from mamlrates.moments import DEFAULT_K_SE, validate_moments
from mamlrates.scenarios import SCENARIOS

logger = logging.getLogger(__name__)

EXIT_INVALID = 1
EXIT_TOLERANCE = 2
EXIT_NUMERICAL = 3
MIN_MOMENT_SAMPLES = 10_000
MOMENT_GRID = range(1, 7)


@contextmanager
def _exit_on_error() -> Iterator[None]:
    """Translate library exceptions into an error line and an exit code."""
    try:
        yield
    except (ArithmeticError, DiscardBudgetError) as exc:
        click.echo(f"Error: {exc}", err=True)
        sys.exit(EXIT_NUMERICAL)
    except (ValueError, OSError, yaml.YAMLError) as exc:
        click.echo(f"Error: {exc}", err=True)
        sys.exit(EXIT_INVALID)


def _get_experiment(ctx: click.Context, scenario: str | None = None) -> Experiment:
    """Build the experiment named on the command line, with global overrides.

    Args:
        ctx: Click context holding the global options.
        scenario: Scenario argument of the subcommand, if any.

    Returns:
        Configured Experiment.
    """
    opts = ctx.obj
    name = scenario or opts["scenario"]
    if name is not None:
        experiment = Experiment.from_scenario(name)
    elif opts["config"] is not None:
        experiment = Experiment.from_file(opts["config"])
    else:
        raise ValueError("Provide --config PATH or --scenario NAME")
    return experiment.with_overrides(
        master_seed=opts["seed"],
        runs=opts["runs"],
        threads=opts["threads"],
        output_path=opts["out"],
    )


@click.group()
@click.option(
    "-c",
    "--config",
    default=None,
    help="Path to an experiment JSON/YAML file.",
    type=click.Path(),
)
@click.option("-s", "--scenario", default=None, help="Built-in scenario name.")
@click.option(
    "--seed", default=None, type=click.IntRange(min=0), help="Master seed override."
)
@click.option(
    "--runs", default=None, type=click.IntRange(min=2), help="Monte Carlo runs."
)
@click.option(
    "--threads", default=None, type=click.IntRange(min=1), help="Worker threads."
)
@click.option("-o", "--out", default=None, help="Output file path.")
@click.option("--verbose", is_flag=True, help="Enable debug logging.")
@click.pass_context
def main(
    ctx: click.Context,
    config: str | None,
    scenario: str | None,
    seed: int | None,
    runs: int | None,
    threads: int | None,
    out: str | None,
    verbose: bool,
) -> None:
    """mamlrates -- Learning-rate theory and simulation for one-step MAML."""
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s: %(message)s")
    ctx.ensure_object(dict)
    ctx.obj.update(
        config=config, scenario=scenario, seed=seed, runs=runs, threads=threads, out=out
    )


@main.command()
@click.option("--json", "as_json", is_flag=True, help="Print the report as JSON.")
@click.pass_context
def theory(ctx: click.Context, as_json: bool) -> None:
    """Evaluate the closed-form loss and learning-rate extrema."""
    with _exit_on_error():
        experiment = _get_experiment(ctx)
        report = experiment.theory()
        curve = None
        grid = experiment.config.sweep
        if experiment.config.output_path and grid is not None:
            xs = grid.points()
            ys = experiment.theory_curve(grid.axis, xs)
            curve = theory_curve_to_csv(grid.axis, xs, ys)

    if as_json:
        click.echo(report_to_json(report))
    else:
        click.echo(f"Scenario: {experiment.config.name}")
        click.echo(f"Regime: {report.loss.regime.value}")
        click.echo(f"Loss: {report.loss.value!r}")
        for name, value in report.loss.breakdown.items():
            click.echo(f"  {name}: {value!r}")
        extrema = report.extrema
        if extrema.alpha_minus is not None and extrema.alpha_plus is not None:
            click.echo(f"alpha_t minimum: {extrema.alpha_minus:.6f}")
            click.echo(f"alpha_t maximum: {extrema.alpha_plus:.6f}")
        if extrema.alpha_r_star is not None:
            click.echo(f"alpha_r optimum: {extrema.alpha_r_star:.6f}")
        if report.slope is not None:
            click.echo(f"Slope at alpha_t=0 (closed form): {report.slope.printed!r}")
            fd = report.slope.finite_difference
            click.echo(f"Slope at alpha_t=0 (finite difference): {fd!r}")
            if not report.slope.consistent:
                click.echo(
                    f"  discrepancy: relative gap {report.slope.relative_gap:.3g}"
                )

    if curve is not None:
        out = Path(str(experiment.config.output_path))
        with _exit_on_error():
            out.write_text(curve)
        click.echo(f"Theory curve written to {out}", err=True)


@main.command()
@click.pass_context
def sweep(ctx: click.Context) -> None:
    """Sweep a learning rate, writing theory and Monte Carlo columns as CSV."""
    with _exit_on_error():
        experiment = _get_experiment(ctx)
        rows = experiment.sweep()
        output = experiment.config.output_path
        if output:
            write_sweep_csv(rows, output)
    if output:
        click.echo(f"Sweep written to {output}", err=True)
    else:
        click.echo(sweep_to_csv(rows), nl=False)


@main.command()
@click.pass_context
def simulate(ctx: click.Context) -> None:
    """Monte Carlo estimate at the configured hyperparameters."""
    with _exit_on_error():
        experiment = _get_experiment(ctx)
        theory_value = experiment.theory_at(experiment.hyperparams).value
        estimate = experiment.simulate()
    click.echo(f"Theory: {theory_value!r}")
    click.echo(f"Monte Carlo: {estimate.mean!r} +/- {estimate.std_error!r}")
    click.echo(f"Runs: {estimate.runs} (discarded {estimate.discarded_runs})")
    click.echo(f"Seed: {estimate.master_seed}")


def _echo_checks(checks: list[MomentCheck]) -> None:
    for check in checks:
        status = "PASS" if check.passed else "FAIL"
        click.echo(
            f"{check.expr:<22} n={check.n} p={check.p} closed={check.closed_form:.6g} "
            f"mc={check.mc_diagonal:.6g} max_z={check.max_z:.2f} {status}"
        )


@main.command()
@click.option("--n", "n", default=5, type=click.IntRange(min=1), help="Rows of X.")
@click.option("--p", "p", default=5, type=click.IntRange(min=1), help="Columns of X.")
@click.option(
    "--samples",
    default=1_000_000,
    type=click.IntRange(min=2),
    help="Sampled matrices per identity.",
)
@click.option(
    "--k", "k", default=DEFAULT_K_SE, type=float, help="Pass threshold in SE units."
)
@click.option("--grid", is_flag=True, help="Check every (n, p) in {1..6} x {1..6}.")
@click.pass_context
def moments(
    ctx: click.Context, n: int, p: int, samples: int, k: float, grid: bool
) -> None:
    """Check the Wishart moment identities against Monte Carlo."""
    if samples < MIN_MOMENT_SAMPLES:
        click.echo(
            f"Warning: insufficient samples for {k:g}-SE test ({samples})", err=True
        )
    seed = ctx.obj["seed"] or 0
    threads = ctx.obj["threads"] or 1
    pairs = [(a, b) for a in MOMENT_GRID for b in MOMENT_GRID] if grid else [(n, p)]
    checks: list[MomentCheck] = []
    with _exit_on_error():
        for a, b in pairs:
            checks.extend(validate_moments(a, b, samples, seed, k=k, threads=threads))
    _echo_checks(checks)
    failed = sum(not check.passed for check in checks)
    click.echo(f"{len(checks) - failed}/{len(checks)} identities within {k:g} SE")
    if ctx.obj["out"]:
        with _exit_on_error():
            Path(ctx.obj["out"]).write_text(report_to_json(checks))
    if failed:
        sys.exit(EXIT_TOLERANCE)


@main.command()
@click.argument("scenario", required=False)
@click.pass_context
def compare(ctx: click.Context, scenario: str | None) -> None:
    """Compare theory against simulation over a scenario's grid."""
    with _exit_on_error():
        experiment = _get_experiment(ctx, scenario)
        rows = experiment.sweep()
        report = experiment.compare(rows)
        if experiment.config.output_path:
            write_sweep_csv(rows, experiment.config.output_path)

    click.echo(
        f"Scenario: {report.scenario} "
        f"({report.axis} swept, tolerance {report.tolerance_se:g} SE)"
    )
    for point in report.points:
        mark = "ok" if point.within_tolerance else "OUT"
        click.echo(
            f"  {report.axis}={point.axis_value:+.4f} theory={point.theory_loss:.6g} "
            f"mc={point.mc_mean:.6g}+/-{point.mc_stderr:.3g} "
            f"z={point.z_score:.2f} {mark}"
        )
    click.echo(f"Theory argmin: {report.theory_argmin:.4f}")
    click.echo(f"Monte Carlo argmin: {report.mc_argmin:.4f}")
    if not report.passed:
        click.echo("Comparison FAILED", err=True)
        sys.exit(EXIT_TOLERANCE)
    click.echo("Comparison passed")


@main.command("scenarios")
def list_scenarios() -> None:
    """List built-in scenarios."""
    for name, build in SCENARIOS.items():
        config = build()
        suffix = "" if config.comparable else " [sweep/theory only]"
        click.echo(f"{name:<14} {config.caption}{suffix}")
