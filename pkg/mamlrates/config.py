"""Configuration loading and validation for mamlrates.

Reads a JSON or YAML experiment file and produces a validated
ExperimentConfig object.
"""

import logging
from enum import StrEnum
from pathlib import Path
from typing import Literal

import numpy as np
import orjson
import yaml
from pydantic import BaseModel, Field, model_validator

from mamlrates.generative import materialize_isotropic
from mamlrates.models import CovarianceSpec, FloatArray, HyperParams, Regime
from mamlrates.search import grid_points
from mamlrates.theory.general import gaussian_F, wishart_covariances

logger = logging.getLogger(__name__)

MAX_GRID_POINTS = 100_000


class CovarianceMode(StrEnum):
    """Where the data covariances come from."""

    ISOTROPIC = "isotropic"
    WISHART = "wishart"
    EXPLICIT = "explicit"


class CovarianceConfig(BaseModel):
    """Covariance source settings.

    Explicit matrices are paths to whitespace-separated text files with p
    rows of p values. Relative paths are resolved against the config file.
    """

    mode: CovarianceMode = CovarianceMode.ISOTROPIC
    seed: int = Field(default=0, ge=0)
    sigma_x: str | None = None
    sigma_w: str | None = None
    f_matrix: str | None = None

    @model_validator(mode="after")
    def _check_paths(self) -> "CovarianceConfig":
        if self.mode is CovarianceMode.EXPLICIT and (
            self.sigma_x is None or self.sigma_w is None
        ):
            raise ValueError("explicit covariance requires sigma_x and sigma_w paths")
        return self

    def resolved(self, base_dir: Path) -> "CovarianceConfig":
        """Return a copy with matrix paths made absolute relative to base_dir."""
        updates = {}
        for key in ("sigma_x", "sigma_w", "f_matrix"):
            value = getattr(self, key)
            if value is not None and not Path(value).is_absolute():
                updates[key] = str(base_dir / value)
        return self.model_copy(update=updates)

    def build(self, hp: HyperParams) -> CovarianceSpec:
        """Construct the CovarianceSpec this config describes.

        Raises:
            ValueError: If a matrix file does not hold a p x p matrix.
            CovarianceError: If a matrix is asymmetric or not PSD.
        """
        if self.mode is CovarianceMode.ISOTROPIC:
            return CovarianceSpec.isotropic()
        if self.mode is CovarianceMode.WISHART:
            return wishart_covariances(hp.p, hp.nu, self.seed)
        assert self.sigma_x is not None and self.sigma_w is not None
        sigma_x = load_matrix(self.sigma_x, hp.p)
        f_matrix = (
            load_matrix(self.f_matrix, hp.p)
            if self.f_matrix is not None
            else gaussian_F(sigma_x)
        )
        sigma_w = load_matrix(self.sigma_w, hp.p)
        spec = CovarianceSpec.general(sigma_x, sigma_w, f_matrix)
        # Factorization surfaces non-PSD input before any run starts.
        _ = spec.input_factor, spec.weight_factor
        return spec


class GridConfig(BaseModel):
    """A learning-rate grid, endpoints included."""

    axis: Literal["alpha_t", "alpha_r"] = "alpha_t"
    start: float
    stop: float
    step: float = Field(gt=0)

    @model_validator(mode="after")
    def _check_size(self) -> "GridConfig":
        if self.start >= self.stop:
            raise ValueError(f"grid start {self.start} must be below stop {self.stop}")
        count = int(np.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        if count > MAX_GRID_POINTS:
            raise ValueError(f"grid has {count} points, limit is {MAX_GRID_POINTS}")
        return self

    def points(self) -> FloatArray:
        """Grid values from start to stop inclusive."""
        return grid_points(self.start, self.stop, self.step)


class ExperimentConfig(BaseModel):
    """Top-level mamlrates experiment configuration."""

    name: str = "custom"
    caption: str = ""
    hyperparams: HyperParams
    covariance: CovarianceConfig = Field(default_factory=CovarianceConfig)
    regime: Regime | None = None
    sweep: GridConfig | None = None
    runs: int = Field(default=1000, ge=2)
    test_tasks_per_run: int = Field(default=100, ge=1)
    master_seed: int = Field(default=0, ge=0)
    threads: int = Field(default=1, ge=1)
    output_path: str | None = None
    tolerance_se: float = Field(default=5.0, gt=0)
    comparable: bool = True

    @property
    def resolved_regime(self) -> Regime:
        """Explicit regime, else GENERAL for non-isotropic data, else by dimensions."""
        if self.regime is not None:
            return self.regime
        if self.covariance.mode is not CovarianceMode.ISOTROPIC:
            return Regime.GENERAL
        return self.hyperparams.regime

    def covariance_spec(self) -> CovarianceSpec:
        """Covariance spec; the isotropic model is materialized for GENERAL."""
        spec = self.covariance.build(self.hyperparams)
        if self.resolved_regime is Regime.GENERAL and spec.sigma_x is None:
            return materialize_isotropic(self.hyperparams)
        return spec


def load_config(config_path: str | Path) -> ExperimentConfig:
    """Load and validate a mamlrates experiment file.

    JSON documents are valid YAML, so both formats are accepted.

    Args:
        config_path: Path to the config file.

    Returns:
        Validated ExperimentConfig with matrix paths resolved.

    Raises:
        FileNotFoundError: If the config file does not exist.
        yaml.YAMLError: If the document is malformed.
        pydantic.ValidationError: If the config fails validation.
    """
    path = Path(config_path)
    if not path.exists():
        raise FileNotFoundError(f"Config file not found: {path}")

    with open(path) as f:
        raw = yaml.safe_load(f) or {}

    config = ExperimentConfig.model_validate(raw)
    config = config.model_copy(
        update={"covariance": config.covariance.resolved(path.parent.resolve())}
    )
    logger.info(
        "Loaded config %r (p=%d, regime=%s) from %s",
        config.name,
        config.hyperparams.p,
        config.resolved_regime.value,
        path,
    )
    return config


def dump_config(config: ExperimentConfig) -> bytes:
    """Serialize a config as indented JSON that load_config reads back."""
    return orjson.dumps(config.model_dump(mode="json"), option=orjson.OPT_INDENT_2)


def load_matrix(path: str | Path, p: int) -> FloatArray:
    """Read a p x p matrix from a whitespace-separated text file.

    Raises:
        FileNotFoundError: If the file does not exist.
        ValueError: If the file does not hold a p x p numeric matrix.
    """
    matrix_path = Path(path)
    if not matrix_path.exists():
        raise FileNotFoundError(f"Matrix file not found: {matrix_path}")
    matrix = np.loadtxt(matrix_path, dtype=np.float64, ndmin=2)
    if matrix.shape != (p, p):
        raise ValueError(
            f"{matrix_path} holds a {matrix.shape} matrix, expected ({p}, {p})"
        )
    return matrix
