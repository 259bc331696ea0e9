"""Tests for the Experiment orchestration engine and built-in scenarios."""

from pathlib import Path

import numpy as np
import pytest

from mamlrates.config import ExperimentConfig, GridConfig
from mamlrates.core import Experiment, z_score
from mamlrates.errors import RegimeError
from mamlrates.models import HyperParams, McEstimate, Regime, SweepRow
from mamlrates.scenarios import SCENARIOS, get_scenario, scenario_names
from mamlrates.theory import loss_curve


def _rows(theory: list[float], mc: list[float], se: float) -> list[SweepRow]:
    grid = np.linspace(-1.0, 1.0, len(theory))
    return [
        SweepRow(axis_value=x, theory_loss=t, mc_mean=m, mc_stderr=se, runs=10)
        for x, t, m in zip(grid, theory, mc, strict=True)
    ]


class TestScenarios:
    """Tests for the scenario registry."""

    def test_names(self) -> None:
        """Every published panel is registered."""
        names = scenario_names()
        for name in ("fig2a", "fig2b", "fig3a", "fig3b", "wishart_a", "wishart_b"):
            assert name in names

    def test_comparable_only(self) -> None:
        """Transition scenarios are not comparison targets."""
        comparable = scenario_names(comparable_only=True)
        assert "fig2a" in comparable
        assert not any(name.startswith("transition") for name in comparable)

    def test_unknown(self) -> None:
        """Unknown names list the valid scenarios."""
        with pytest.raises(ValueError, match="Valid scenarios: fig2a"):
            get_scenario("fig9")

    def test_panel_b(self) -> None:
        """Panel b sweeps alpha_t with alpha_r fixed at 0.2."""
        config = get_scenario("fig2b")
        assert config.hyperparams.alpha_r == 0.2
        assert config.sweep is not None
        assert config.sweep.axis == "alpha_t"
        assert config.sweep.points().size == 9
        assert config.resolved_regime is Regime.OVER

    def test_panel_a(self) -> None:
        """Panel a sweeps alpha_r with alpha_t fixed at 0.2."""
        config = get_scenario("fig3a")
        assert config.hyperparams.alpha_t == 0.2
        assert config.sweep is not None
        assert config.sweep.axis == "alpha_r"
        assert config.sweep.points().size == 9
        assert config.tolerance_se == 3.0
        assert config.resolved_regime is Regime.UNDER

    def test_wishart(self) -> None:
        """Wishart panels use the general regime."""
        config = get_scenario("wishart_b")
        assert config.resolved_regime is Regime.GENERAL
        assert config.runs == 500

    @pytest.mark.parametrize("name", list(SCENARIOS))
    def test_all_build(self, name: str) -> None:
        """Every scenario validates."""
        assert get_scenario(name).name == name


class TestZScore:
    """Tests for z_score."""

    def test_exact_match(self) -> None:
        """Zero gap is zero even with zero error."""
        estimate = McEstimate(mean=0.0, std_error=0.0, runs=2, master_seed=0)
        assert z_score(0.0, estimate) == 0.0

    def test_zero_error(self) -> None:
        """A gap with zero error is infinite."""
        estimate = McEstimate(mean=0.0, std_error=0.0, runs=2, master_seed=0)
        assert z_score(0.1, estimate) == float("inf")

    def test_ratio(self) -> None:
        """The gap is measured in standard errors."""
        estimate = McEstimate(mean=1.0, std_error=0.5, runs=2, master_seed=0)
        assert z_score(2.0, estimate) == pytest.approx(2.0)


class TestExperiment:
    """Tests for Experiment."""

    def test_from_file(self, tmp_config: Path) -> None:
        """An experiment loads from a config file."""
        experiment = Experiment.from_file(tmp_config)
        assert experiment.config.name == "tiny"
        assert experiment.regime is Regime.OVER

    def test_theory(self, fig2_hp: HyperParams) -> None:
        """Theory reports the loss and the alpha_t extrema."""
        report = Experiment(ExperimentConfig(hyperparams=fig2_hp)).theory()
        assert report.loss.value == pytest.approx(0.6875)
        assert report.extrema.alpha_minus == pytest.approx(-1.011152, abs=1e-6)
        assert report.slope is None

    def test_theory_underparam_slope(self, fig3_hp: HyperParams) -> None:
        """Underparameterized theory includes the slope diagnostic."""
        report = Experiment(ExperimentConfig(hyperparams=fig3_hp)).theory()
        assert report.slope is not None
        assert report.slope.printed == pytest.approx(0.0012)

    def test_wrong_regime(self, fig2_hp: HyperParams) -> None:
        """A stated regime that contradicts the dimensions is an error."""
        config = ExperimentConfig(hyperparams=fig2_hp, regime=Regime.UNDER)
        with pytest.raises(RegimeError):
            Experiment(config).theory()

    def test_init_gap_warning(
        self, fig2_hp: HyperParams, caplog: pytest.LogCaptureFixture
    ) -> None:
        """A large initial gap logs a warning."""
        hp = fig2_hp.replace(w0=0.5)
        Experiment(ExperimentConfig(hyperparams=hp)).theory()
        assert "exceeds 1" in caplog.text

    def test_wishart_theory(self) -> None:
        """The Wishart scenario yields a finite general-regime loss."""
        report = Experiment.from_scenario("wishart_b").theory()
        assert report.loss.regime is Regime.GENERAL
        assert np.isfinite(report.loss.value)
        assert report.extrema.alpha_minus is None

    def test_with_overrides(self) -> None:
        """Overrides replace fields, ignore None and revalidate."""
        experiment = Experiment.from_scenario("fig2b")
        updated = experiment.with_overrides(runs=7, master_seed=None, threads=2)
        assert updated.config.runs == 7
        assert updated.config.threads == 2
        assert updated.config.master_seed == experiment.config.master_seed
        assert experiment.with_overrides(runs=None) is experiment
        with pytest.raises(ValueError):
            experiment.with_overrides(runs=1)

    def test_theory_curve(self) -> None:
        """The theory curve is the vectorized closed form."""
        experiment = Experiment.from_scenario("fig2b")
        xs = np.array([-0.5, 0.0, 0.5])
        np.testing.assert_allclose(
            experiment.theory_curve("alpha_t", xs),
            loss_curve(experiment.hyperparams, Regime.OVER, "alpha_t", xs),
        )

    def test_theory_argmin(self) -> None:
        """The alpha_t argmin over [-3, 3] is alpha_t^-."""
        experiment = Experiment.from_scenario("fig2b")
        assert experiment.theory_argmin("alpha_t") == pytest.approx(-1.011152, abs=1e-4)

    def test_simulate(self, small_over_hp: HyperParams) -> None:
        """simulate uses the configured runs and seed."""
        config = ExperimentConfig(
            hyperparams=small_over_hp, runs=3, test_tasks_per_run=2, master_seed=5
        )
        estimate = Experiment(config).simulate()
        assert estimate.runs == 3
        assert estimate.master_seed == 5

    def test_sweep(self, small_over_hp: HyperParams) -> None:
        """A sweep returns one row per grid point with matching theory."""
        config = ExperimentConfig(
            hyperparams=small_over_hp,
            sweep=GridConfig(axis="alpha_r", start=0.0, stop=0.5, step=0.25),
            runs=3,
            test_tasks_per_run=2,
        )
        experiment = Experiment(config)
        rows = experiment.sweep()
        assert [row.axis_value for row in rows] == [0.0, 0.25, 0.5]
        expected = experiment.theory_curve("alpha_r", np.array([0.0, 0.25, 0.5]))
        np.testing.assert_allclose([row.theory_loss for row in rows], expected)
        assert all(row.runs == 3 for row in rows)

    def test_sweep_thread_invariance(self, small_over_hp: HyperParams) -> None:
        """Sweeps are bit-identical across thread counts."""
        config = ExperimentConfig(
            hyperparams=small_over_hp,
            sweep=GridConfig(axis="alpha_t", start=0.0, stop=0.5, step=0.25),
            runs=4,
            test_tasks_per_run=2,
        )
        one = Experiment(config).sweep()
        four = Experiment(config).with_overrides(threads=4).sweep()
        assert one == four

    def test_sweep_requires_grid(self, small_over_hp: HyperParams) -> None:
        """A config without a grid cannot sweep."""
        with pytest.raises(ValueError, match="defines no sweep grid"):
            Experiment(ExperimentConfig(hyperparams=small_over_hp)).sweep()


class TestCompare:
    """Tests for Experiment.compare."""

    def test_pass(self) -> None:
        """Matching rows pass."""
        experiment = Experiment.from_scenario("fig2b")
        theory = [1.0, 0.8, 0.7, 0.75, 0.9]
        report = experiment.compare(_rows(theory, theory, 0.01))
        assert report.passed
        assert all(point.z_score == 0.0 for point in report.points)
        assert report.mc_argmin == pytest.approx(0.0, abs=0.5)
        assert report.theory_argmin == pytest.approx(-1.011152, abs=1e-4)

    def test_fail(self) -> None:
        """One row beyond tolerance fails the comparison."""
        experiment = Experiment.from_scenario("fig2b")
        theory = [1.0, 0.8, 0.7, 0.75, 0.9]
        mc = [1.0, 0.8, 0.7, 0.85, 0.9]
        report = experiment.compare(_rows(theory, mc, 0.01))
        assert not report.passed
        assert [point.within_tolerance for point in report.points] == [
            True,
            True,
            True,
            False,
            True,
        ]
        assert report.points[3].z_score == pytest.approx(10.0)

    def test_tolerance_boundary(self) -> None:
        """A gap of exactly tolerance_se standard errors passes."""
        experiment = Experiment.from_scenario("fig2b")
        report = experiment.compare(_rows([1.0, 1.0, 1.0], [1.0, 1.0, 1.5], 0.1))
        assert report.points[2].z_score == pytest.approx(5.0)
        assert report.points[2].within_tolerance
        assert report.tolerance_se == 5.0

    def test_not_comparable(self) -> None:
        """Transition scenarios refuse comparison."""
        with pytest.raises(ValueError, match="not a comparison target"):
            Experiment.from_scenario("transition_a").compare()
