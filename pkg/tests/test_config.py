"""Tests for configuration loading and validation."""

from pathlib import Path

import numpy as np
import orjson
import pytest
from pydantic import ValidationError

from mamlrates.config import (
    CovarianceConfig,
    CovarianceMode,
    ExperimentConfig,
    GridConfig,
    dump_config,
    load_config,
    load_matrix,
)
from mamlrates.errors import CovarianceError
from mamlrates.models import CovarianceKind, HyperParams, Regime
from mamlrates.theory.general import gaussian_F

YAML_CONFIG = """\
name: yaml-example
hyperparams:
  n_t: 5
  n_v: 25
  n_r: 10
  m: 40
  p: 30
  sigma: 0.2
  nu: 0.2
sweep:
  axis: alpha_r
  start: -0.5
  stop: 1.0
  step: 0.1875
runs: 10
"""


def _write_matrix(path: Path, matrix: np.ndarray) -> str:
    np.savetxt(path, matrix)
    return path.name


class TestLoadConfig:
    """Tests for load_config."""

    def test_json(self, tmp_config: Path) -> None:
        """A JSON config loads with its values."""
        config = load_config(tmp_config)
        assert config.name == "tiny"
        assert config.hyperparams.p == 60
        assert config.runs == 4
        assert config.master_seed == 11
        assert config.sweep is not None
        assert config.sweep.axis == "alpha_t"

    def test_yaml(self, tmp_path: Path) -> None:
        """A YAML config loads with its values."""
        path = tmp_path / "experiment.yaml"
        path.write_text(YAML_CONFIG)
        config = load_config(path)
        assert config.name == "yaml-example"
        assert config.resolved_regime is Regime.UNDER
        assert config.sweep is not None
        assert config.sweep.points().size == 9

    def test_defaults(self, tmp_config: Path) -> None:
        """Unset fields take their defaults."""
        config = load_config(tmp_config)
        assert config.threads == 1
        assert config.tolerance_se == 5.0
        assert config.covariance.mode is CovarianceMode.ISOTROPIC
        assert config.comparable

    def test_missing_config(self, tmp_path: Path) -> None:
        """A missing file raises FileNotFoundError."""
        with pytest.raises(FileNotFoundError, match="Config file not found"):
            load_config(tmp_path / "nonexistent.yaml")

    def test_invalid_field(self, tmp_path: Path) -> None:
        """Out-of-range values fail validation."""
        path = tmp_path / "bad.json"
        path.write_bytes(
            orjson.dumps(
                {
                    "hyperparams": {"n_t": 1, "n_v": 1, "n_r": 1, "m": 1, "p": 4},
                    "runs": 1,
                }
            )
        )
        with pytest.raises(ValidationError):
            load_config(path)

    def test_regime_boundary(self, tmp_path: Path) -> None:
        """p == n_v*m is reported by validation."""
        path = tmp_path / "boundary.json"
        path.write_bytes(
            orjson.dumps(
                {"hyperparams": {"n_t": 5, "n_v": 2, "n_r": 5, "m": 3, "p": 6}}
            )
        )
        with pytest.raises(ValidationError, match="regime boundary"):
            load_config(path)

    def test_round_trip(self, tmp_config: Path, tmp_path: Path) -> None:
        """dump_config output loads back to an equal config."""
        config = load_config(tmp_config)
        path = tmp_path / "dumped.json"
        path.write_bytes(dump_config(config))
        assert load_config(path) == config


class TestGridConfig:
    """Tests for GridConfig."""

    def test_points(self) -> None:
        """[-1, 1] with step 0.25 has nine points."""
        grid = GridConfig(axis="alpha_t", start=-1.0, stop=1.0, step=0.25)
        np.testing.assert_allclose(grid.points(), np.linspace(-1.0, 1.0, 9))

    def test_non_positive_step(self) -> None:
        """step must be positive."""
        with pytest.raises(ValidationError):
            GridConfig(start=0.0, stop=1.0, step=0.0)

    def test_reversed_interval(self) -> None:
        """start must be below stop."""
        with pytest.raises(ValidationError, match="must be below stop"):
            GridConfig(start=1.0, stop=0.0, step=0.1)

    def test_too_many_points(self) -> None:
        """Grids are capped at 100,000 points."""
        with pytest.raises(ValidationError, match="limit is 100000"):
            GridConfig(start=0.0, stop=1.0, step=1e-6)

    def test_unknown_axis(self) -> None:
        """Only alpha_t and alpha_r are sweepable."""
        with pytest.raises(ValidationError):
            GridConfig(
                axis="nu",  # type: ignore[arg-type]
                start=0.0,
                stop=1.0,
                step=0.1,
            )


class TestCovarianceConfig:
    """Tests for covariance sources."""

    def test_isotropic(self, fig2_hp: HyperParams) -> None:
        """The default mode is the identity model."""
        assert CovarianceConfig().build(fig2_hp).kind is CovarianceKind.ISOTROPIC

    def test_wishart(self, fig2_hp: HyperParams) -> None:
        """Wishart mode draws p x p matrices deterministically."""
        config = CovarianceConfig(mode=CovarianceMode.WISHART, seed=4)
        a = config.build(fig2_hp)
        b = config.build(fig2_hp)
        assert a.dim == 60
        np.testing.assert_array_equal(a.sigma_x, b.sigma_x)

    def test_explicit_requires_paths(self) -> None:
        """Explicit mode needs sigma_x and sigma_w."""
        with pytest.raises(ValidationError, match="requires sigma_x and sigma_w"):
            CovarianceConfig(mode=CovarianceMode.EXPLICIT, sigma_x="sx.txt")

    def test_explicit_relative_paths(self, tmp_path: Path) -> None:
        """Matrix paths resolve against the config directory; F defaults to Gaussian."""
        sigma_x = np.diag([2.0, 1.0, 0.5])
        config = {
            "hyperparams": {"n_t": 4, "n_v": 1, "n_r": 4, "m": 2, "p": 3},
            "covariance": {
                "mode": "explicit",
                "sigma_x": _write_matrix(tmp_path / "sx.txt", sigma_x),
                "sigma_w": _write_matrix(tmp_path / "sw.txt", 0.1 * np.eye(3)),
            },
        }
        path = tmp_path / "explicit.json"
        path.write_bytes(orjson.dumps(config))
        loaded = load_config(path)
        assert loaded.resolved_regime is Regime.GENERAL
        spec = loaded.covariance_spec()
        np.testing.assert_allclose(spec.sigma_x, sigma_x)
        np.testing.assert_allclose(spec.f_matrix, gaussian_F(sigma_x))

    def test_explicit_non_psd(self, tmp_path: Path) -> None:
        """A negative eigenvalue is caught when the spec is built."""
        config = CovarianceConfig(
            mode=CovarianceMode.EXPLICIT,
            sigma_x=str(tmp_path / "sx.txt"),
            sigma_w=str(tmp_path / "sw.txt"),
        )
        _write_matrix(tmp_path / "sx.txt", np.eye(2))
        _write_matrix(tmp_path / "sw.txt", np.diag([1.0, -1.0]))
        hp = HyperParams(n_t=2, n_v=1, n_r=2, m=1, p=2)
        with pytest.raises(CovarianceError, match="not positive semidefinite"):
            config.build(hp)

    def test_isotropic_general_materializes(self, fig2_hp: HyperParams) -> None:
        """Forcing GENERAL on isotropic data materializes the identity model."""
        config = ExperimentConfig(hyperparams=fig2_hp, regime=Regime.GENERAL)
        spec = config.covariance_spec()
        assert spec.kind is CovarianceKind.GENERAL
        np.testing.assert_array_equal(spec.f_matrix, 62 * np.eye(60))


class TestLoadMatrix:
    """Tests for load_matrix."""

    def test_reads_matrix(self, tmp_path: Path) -> None:
        """A p x p text file is read back."""
        path = tmp_path / "m.txt"
        _write_matrix(path, np.array([[1.0, 0.5], [0.5, 2.0]]))
        np.testing.assert_array_equal(load_matrix(path, 2), [[1.0, 0.5], [0.5, 2.0]])

    def test_scalar_file(self, tmp_path: Path) -> None:
        """A single value is a 1 x 1 matrix."""
        path = tmp_path / "m.txt"
        path.write_text("3.0\n")
        assert load_matrix(path, 1).shape == (1, 1)

    def test_wrong_shape(self, tmp_path: Path) -> None:
        """A matrix of the wrong size is rejected."""
        path = tmp_path / "m.txt"
        _write_matrix(path, np.eye(3))
        with pytest.raises(ValueError, match="expected \\(2, 2\\)"):
            load_matrix(path, 2)

    def test_missing_file(self, tmp_path: Path) -> None:
        """A missing file raises FileNotFoundError."""
        with pytest.raises(FileNotFoundError, match="Matrix file not found"):
            load_matrix(tmp_path / "missing.txt", 2)
