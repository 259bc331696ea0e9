"""Built-in experiment scenarios.

Parameter sets reproduce the published learning-rate figures: panel a
sweeps alpha_r with alpha_t = 0.2, panel b sweeps alpha_t with
alpha_r = 0.2. The transition scenarios walk from strongly
overparameterized to strongly underparameterized data and are not used as
acceptance targets.
"""

from collections.abc import Callable

from mamlrates.config import (
    CovarianceConfig,
    CovarianceMode,
    ExperimentConfig,
    GridConfig,
)
from mamlrates.models import HyperParams, Regime

ALPHA_T_GRID = GridConfig(axis="alpha_t", start=-1.0, stop=1.0, step=0.25)
ALPHA_R_GRID = GridConfig(axis="alpha_r", start=-0.5, stop=1.0, step=0.1875)

_FIG2 = {"n_t": 30, "n_v": 2, "n_r": 20, "m": 3, "p": 60, "sigma": 1.0, "nu": 0.5}
_FIG3 = {"n_t": 5, "n_v": 25, "n_r": 10, "m": 40, "p": 30, "sigma": 0.2, "nu": 0.2}
_TRANSITION = {
    "n_t": 40,
    "n_r": 40,
    "p": 50,
    "sigma": 0.5,
    "nu": 0.5,
    "alpha_r": 0.2,
    "w0": 0.1,
}


def _panel(
    name: str,
    caption: str,
    base: dict[str, float],
    panel: str,
    tolerance_se: float,
    runs: int = 1000,
    covariance: CovarianceConfig | None = None,
    regime: Regime | None = None,
) -> ExperimentConfig:
    if panel == "a":
        hp, grid = {**base, "alpha_t": 0.2}, ALPHA_R_GRID
    else:
        hp, grid = {**base, "alpha_r": 0.2}, ALPHA_T_GRID
    return ExperimentConfig(
        name=name,
        caption=caption,
        hyperparams=HyperParams.model_validate(hp),
        covariance=covariance or CovarianceConfig(),
        regime=regime,
        sweep=grid,
        runs=runs,
        tolerance_se=tolerance_se,
    )


def _transition(name: str, m: int, n_v: int) -> ExperimentConfig:
    hp = HyperParams.model_validate({**_TRANSITION, "m": m, "n_v": n_v})
    return ExperimentConfig(
        name=name,
        caption=f"Regime transition, m={m}, n_v={n_v}, alpha_t swept",
        hyperparams=hp,
        sweep=ALPHA_T_GRID,
        runs=100,
        comparable=False,
    )


_WISHART = CovarianceConfig(mode=CovarianceMode.WISHART, seed=0)

SCENARIOS: dict[str, Callable[[], ExperimentConfig]] = {
    "fig2a": lambda: _panel(
        "fig2a", "Overparameterized, alpha_r swept (alpha_t = 0.2)", _FIG2, "a", 5.0
    ),
    "fig2b": lambda: _panel(
        "fig2b", "Overparameterized, alpha_t swept (alpha_r = 0.2)", _FIG2, "b", 5.0
    ),
    "fig3a": lambda: _panel(
        "fig3a", "Underparameterized, alpha_r swept (alpha_t = 0.2)", _FIG3, "a", 3.0
    ),
    "fig3b": lambda: _panel(
        "fig3b", "Underparameterized, alpha_t swept (alpha_r = 0.2)", _FIG3, "b", 3.0
    ),
    "wishart_a": lambda: _panel(
        "wishart_a",
        "Wishart covariances, alpha_r swept (alpha_t = 0.2)",
        _FIG2,
        "a",
        5.0,
        runs=500,
        covariance=_WISHART,
        regime=Regime.GENERAL,
    ),
    "wishart_b": lambda: _panel(
        "wishart_b",
        "Wishart covariances, alpha_t swept (alpha_r = 0.2)",
        _FIG2,
        "b",
        5.0,
        runs=500,
        covariance=_WISHART,
        regime=Regime.GENERAL,
    ),
    "transition_a": lambda: _transition("transition_a", 1, 2),
    "transition_b": lambda: _transition("transition_b", 5, 5),
    "transition_c": lambda: _transition("transition_c", 10, 10),
    "transition_d": lambda: _transition("transition_d", 10, 40),
}


def scenario_names(comparable_only: bool = False) -> list[str]:
    """Names of the built-in scenarios, in definition order."""
    return [
        name
        for name, build in SCENARIOS.items()
        if not comparable_only or build().comparable
    ]


def get_scenario(name: str) -> ExperimentConfig:
    """Build a scenario by name.

    Raises:
        ValueError: If the name is unknown; the message lists valid names.
    """
    build = SCENARIOS.get(name)
    if build is None:
        raise ValueError(
            f"Unknown scenario {name!r}. Valid scenarios: {', '.join(SCENARIOS)}"
        )
    return build()
