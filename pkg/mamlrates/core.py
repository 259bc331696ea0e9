"""Core orchestration engine for mamlrates.

Ties together configuration, closed-form theory, the Monte Carlo simulator
and export. This is the single entry point used by the CLI and by library
consumers.
"""

import logging
import math
from functools import cached_property
from pathlib import Path
from typing import Any

import numpy as np

from mamlrates.config import ExperimentConfig, load_config
from mamlrates.models import (
    ComparePoint,
    CompareReport,
    CovarianceSpec,
    FloatArray,
    HyperParams,
    McEstimate,
    Regime,
    SweepRow,
    TheoryLoss,
    TheoryReport,
)
from mamlrates.scenarios import get_scenario
from mamlrates.search import DEFAULT_STEP, grid_argmin, quadratic_fit_argmin
from mamlrates.simulator import run_experiment
from mamlrates.theory import loss_curve, rate_extrema, theory_loss
from mamlrates.theory.isotropic import slope_diagnostic

logger = logging.getLogger(__name__)

INIT_GAP_WARNING = 1.0
# Each general-regime curve point re-evaluates p x p matrix products.
GENERAL_ARGMIN_STEP = 1e-3


def z_score(theory: float, estimate: McEstimate) -> float:
    """|theory - mean| / std_error; 0 for an exact match, inf for zero SE otherwise."""
    gap = abs(theory - estimate.mean)
    if gap == 0:
        return 0.0
    if estimate.std_error == 0:
        return math.inf
    return gap / estimate.std_error


class Experiment:
    """One configured experiment: theory, simulation, sweeps and comparisons."""

    def __init__(self, config: ExperimentConfig) -> None:
        """Initialize from a validated config.

        Args:
            config: Experiment configuration.
        """
        self.config = config
        self.regime = config.resolved_regime

    @classmethod
    def from_file(cls, config_path: str | Path) -> "Experiment":
        """Load an experiment from a JSON or YAML config file."""
        return cls(load_config(config_path))

    @classmethod
    def from_scenario(cls, name: str) -> "Experiment":
        """Build a built-in scenario by name."""
        return cls(get_scenario(name))

    def with_overrides(self, **updates: Any) -> "Experiment":
        """Return a new experiment with top-level config fields replaced.

        ``None`` values are ignored. The result is revalidated.
        """
        changes = {key: value for key, value in updates.items() if value is not None}
        if not changes:
            return self
        data = {**self.config.model_dump(), **changes}
        return Experiment(ExperimentConfig.model_validate(data))

    @property
    def hyperparams(self) -> HyperParams:
        """Base hyperparameters."""
        return self.config.hyperparams

    @cached_property
    def covariance(self) -> CovarianceSpec:
        """Covariance spec, built once (a Wishart draw or matrix files)."""
        return self.config.covariance_spec()

    def _warn_init_gap(self) -> None:
        gap = self.hyperparams.init_gap_sq
        if gap > INIT_GAP_WARNING:
            logger.warning(
                "|omega0 - w0|^2 = %.3g exceeds 1; theory may deviate from simulation",
                gap,
            )

    def theory_at(self, hp: HyperParams) -> TheoryLoss:
        """Closed-form loss at the given hyperparameters in this experiment's regime."""
        return theory_loss(hp, self.regime, self.covariance)

    def theory(self) -> TheoryReport:
        """Loss, breakdown, rate extrema and (underparameterized) slope diagnostic.

        Raises:
            RegimeError: If the configured regime does not match the dimensions.
        """
        self._warn_init_gap()
        hp = self.hyperparams
        loss = self.theory_at(hp)
        extrema = rate_extrema(hp, self.regime, self.covariance)
        slope = slope_diagnostic(hp) if self.regime is Regime.UNDER else None
        return TheoryReport(
            loss=loss, extrema=extrema, slope=slope, init_gap_sq=hp.init_gap_sq
        )

    def theory_curve(self, axis: str, values: FloatArray) -> FloatArray:
        """Closed-form loss along one learning-rate axis."""
        return loss_curve(self.hyperparams, self.regime, axis, values, self.covariance)

    def theory_argmin(self, axis: str) -> float:
        """Grid argmin of the closed-form loss over [-3, 3] along ``axis``."""
        step = GENERAL_ARGMIN_STEP if self.regime is Regime.GENERAL else DEFAULT_STEP
        return grid_argmin(lambda xs: self.theory_curve(axis, xs), step=step)

    def simulate(self, hp: HyperParams | None = None) -> McEstimate:
        """Monte Carlo estimate at ``hp`` (the base hyperparameters by default)."""
        config = self.config
        return run_experiment(
            hp or self.hyperparams,
            self.covariance,
            runs=config.runs,
            test_tasks_per_run=config.test_tasks_per_run,
            seed=config.master_seed,
            threads=config.threads,
        )

    def sweep(self) -> list[SweepRow]:
        """Theory and Monte Carlo at every grid point.

        Every grid point reuses the master seed.

        Raises:
            ValueError: If the config has no sweep grid.
        """
        grid = self.config.sweep
        if grid is None:
            raise ValueError(f"Config {self.config.name!r} defines no sweep grid")
        self._warn_init_gap()
        rows: list[SweepRow] = []
        points = grid.points()
        for i, value in enumerate(points, start=1):
            hp = self.hyperparams.replace(**{grid.axis: float(value)})
            theory = self.theory_at(hp).value
            estimate = self.simulate(hp)
            logger.info(
                "[%d/%d] %s=%.6g theory=%.6g mc=%.6g +/- %.3g",
                i,
                len(points),
                grid.axis,
                value,
                theory,
                estimate.mean,
                estimate.std_error,
            )
            rows.append(
                SweepRow(
                    axis_value=float(value),
                    theory_loss=theory,
                    mc_mean=estimate.mean,
                    mc_stderr=estimate.std_error,
                    runs=estimate.runs,
                    discarded_runs=estimate.discarded_runs,
                )
            )
        return rows

    def compare(self, rows: list[SweepRow] | None = None) -> CompareReport:
        """Check theory against simulation at every grid point.

        Args:
            rows: Precomputed sweep rows; computed with sweep() when omitted.

        Returns:
            CompareReport; ``passed`` iff every |theory - mc| <= tolerance_se * SE.

        Raises:
            ValueError: If the scenario is not a comparison target or has no grid.
        """
        if not self.config.comparable:
            raise ValueError(
                f"Scenario {self.config.name!r} is not a comparison target"
            )
        rows = rows if rows is not None else self.sweep()
        assert self.config.sweep is not None
        axis = self.config.sweep.axis
        tol = self.config.tolerance_se
        points = []
        for row in rows:
            estimate = McEstimate(
                mean=row.mc_mean,
                std_error=row.mc_stderr,
                runs=row.runs,
                master_seed=self.config.master_seed,
            )
            z = z_score(row.theory_loss, estimate)
            points.append(
                ComparePoint(
                    axis_value=row.axis_value,
                    theory_loss=row.theory_loss,
                    mc_mean=row.mc_mean,
                    mc_stderr=row.mc_stderr,
                    z_score=z,
                    within_tolerance=z <= tol,
                )
            )
        report = CompareReport(
            scenario=self.config.name,
            axis=axis,
            tolerance_se=tol,
            points=points,
            theory_argmin=self.theory_argmin(axis),
            mc_argmin=quadratic_fit_argmin(
                np.array([r.axis_value for r in rows]),
                np.array([r.mc_mean for r in rows]),
            ),
        )
        logger.info(
            "Compare %s: %d/%d points within %.1f SE",
            report.scenario,
            sum(p.within_tolerance for p in points),
            len(points),
            tol,
        )
        return report
