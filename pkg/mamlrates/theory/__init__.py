"""Closed-form average test losses.

The caller always names the regime; a regime that does not match the
dimensions raises RegimeError instead of switching formulas.
"""

import numpy as np
from numpy.typing import ArrayLike

from mamlrates.errors import FlatObjectiveError
from mamlrates.models import (
    CovarianceSpec,
    FloatArray,
    HyperParams,
    RateExtrema,
    Regime,
    TheoryLoss,
)
from mamlrates.theory import general, isotropic


def _general_cov(cov: CovarianceSpec | None) -> CovarianceSpec:
    if cov is None:
        raise ValueError("The general regime requires a covariance spec")
    return cov


def theory_loss(
    hp: HyperParams, regime: Regime, cov: CovarianceSpec | None = None
) -> TheoryLoss:
    """Evaluate the closed-form loss for the stated regime.

    Args:
        hp: Hyperparameters.
        regime: OVER, UNDER or GENERAL.
        cov: Covariance spec, required for GENERAL.

    Returns:
        The TheoryLoss.

    Raises:
        RegimeError: If the regime does not match the dimensions.
    """
    if regime is Regime.GENERAL:
        return general.loss_general(hp, _general_cov(cov))
    if regime is Regime.OVER:
        return isotropic.loss_overparam(hp)
    return isotropic.loss_underparam(hp)


def alpha_r_optimum(
    hp: HyperParams, regime: Regime, cov: CovarianceSpec | None = None
) -> float:
    """Exact argmin over alpha_r of the closed-form loss for the stated regime."""
    if regime is Regime.GENERAL:
        return general.alpha_r_optimum(hp, _general_cov(cov))
    return isotropic.alpha_r_optimum(hp, regime)


def rate_extrema(
    hp: HyperParams, regime: Regime, cov: CovarianceSpec | None = None
) -> RateExtrema:
    """alpha_t^(-/+) (isotropic overparameterized only) together with alpha_r*.

    alpha_r_star is left empty when the objective is flat in alpha_r.
    """
    extrema = (
        isotropic.alpha_t_extrema(hp) if regime is Regime.OVER else RateExtrema()
    )
    try:
        star: float | None = alpha_r_optimum(hp, regime, cov)
    except FlatObjectiveError:
        star = None
    return extrema.model_copy(update={"alpha_r_star": star})


def loss_curve(
    hp: HyperParams,
    regime: Regime,
    axis: str,
    values: ArrayLike,
    cov: CovarianceSpec | None = None,
) -> FloatArray:
    """Loss along the alpha_t or alpha_r axis with everything else fixed."""
    if regime is not Regime.GENERAL:
        return isotropic.loss_curve(hp, regime, axis, values)
    if axis not in ("alpha_t", "alpha_r"):
        raise ValueError(f"Unknown sweep axis {axis!r}; expected alpha_t or alpha_r")
    spec = _general_cov(cov)
    rates = np.atleast_1d(np.asarray(values, dtype=np.float64))
    return np.array(
        [
            general.loss_general(hp.replace(**{axis: float(rate)}), spec).value
            for rate in rates
        ]
    )


__all__ = [
    "alpha_r_optimum",
    "loss_curve",
    "rate_extrema",
    "theory_loss",
]
