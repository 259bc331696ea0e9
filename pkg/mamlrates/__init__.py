"""mamlrates -- Learning-rate theory and simulation for one-step MAML."""

from mamlrates.config import ExperimentConfig, load_config
from mamlrates.core import Experiment
from mamlrates.models import (
    CovarianceKind,
    CovarianceSpec,
    HyperParams,
    McEstimate,
    RateExtrema,
    Regime,
    TaskData,
    TestTaskData,
    TheoryLoss,
)
from mamlrates.simulator import run_experiment
from mamlrates.theory import alpha_r_optimum, rate_extrema, theory_loss

__all__ = [
    "CovarianceKind",
    "CovarianceSpec",
    "Experiment",
    "ExperimentConfig",
    "HyperParams",
    "McEstimate",
    "RateExtrema",
    "Regime",
    "TaskData",
    "TestTaskData",
    "TheoryLoss",
    "alpha_r_optimum",
    "load_config",
    "rate_extrema",
    "run_experiment",
    "theory_loss",
]
