"""Shared pytest fixtures for mamlrates tests."""

from pathlib import Path

import numpy as np
import orjson
import pytest

from mamlrates.models import CovarianceSpec, FloatArray, HyperParams
from mamlrates.theory.general import gaussian_F


def random_psd(p: int, rng: np.random.Generator) -> FloatArray:
    """A well-conditioned random symmetric positive-definite matrix."""
    a = rng.standard_normal((p, p))
    return a @ a.T / p + 0.5 * np.eye(p)


@pytest.fixture
def fig2_hp() -> HyperParams:
    """Overparameterized parameters of the published alpha_t/alpha_r figure."""
    return HyperParams(n_t=30, n_v=2, n_r=20, m=3, p=60, sigma=1.0, nu=0.5)


@pytest.fixture
def fig3_hp() -> HyperParams:
    """Underparameterized parameters of the published figure."""
    return HyperParams(n_t=5, n_v=25, n_r=10, m=40, p=30, sigma=0.2, nu=0.2)


@pytest.fixture
def small_over_hp() -> HyperParams:
    """A small overparameterized instance for fast simulation tests."""
    return HyperParams(
        n_t=6, n_v=2, n_r=5, n_s=10, m=2, p=8, sigma=0.5, nu=0.5,
        alpha_t=0.2, alpha_r=0.2,
    )


@pytest.fixture
def small_under_hp() -> HyperParams:
    """A small underparameterized instance for fast simulation tests."""
    return HyperParams(
        n_t=4, n_v=4, n_r=4, n_s=10, m=3, p=3, sigma=0.5, nu=0.5,
        alpha_t=0.2, alpha_r=0.2,
    )


@pytest.fixture
def isotropic() -> CovarianceSpec:
    """The identity-covariance model."""
    return CovarianceSpec.isotropic()


@pytest.fixture
def general_cov() -> CovarianceSpec:
    """A random 4 x 4 Gaussian covariance spec."""
    rng = np.random.default_rng(7)
    sigma_x = random_psd(4, rng)
    sigma_w = 0.1 * random_psd(4, rng)
    return CovarianceSpec.general(sigma_x, sigma_w, gaussian_F(sigma_x))


@pytest.fixture
def tmp_config(tmp_path: Path) -> Path:
    """Write a minimal JSON experiment config and return its path."""
    config = {
        "name": "tiny",
        "hyperparams": {
            "n_t": 30,
            "n_v": 2,
            "n_r": 20,
            "m": 3,
            "p": 60,
            "sigma": 1.0,
            "nu": 0.5,
        },
        "sweep": {"axis": "alpha_t", "start": -1.0, "stop": 1.0, "step": 0.25},
        "runs": 4,
        "test_tasks_per_run": 3,
        "master_seed": 11,
    }
    path = tmp_path / "experiment.json"
    path.write_bytes(orjson.dumps(config))
    return path
