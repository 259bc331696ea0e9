"""Closed-form average test loss for isotropic Gaussian mixed linear regression.

Covers the overparameterized (p > n_v m) and underparameterized
(p < n_v m) regimes, the h factors, the stationary points in the learning
rates, and the slope of the underparameterized loss at alpha_t = 0.
Remainder terms of the asymptotic expansions are not modelled.

The component functions accept numpy arrays for the learning rates so
that whole curves can be evaluated at once.
"""

import logging
import math

import numpy as np
from numpy.typing import ArrayLike

from mamlrates.errors import FlatObjectiveError, RegimeError
from mamlrates.models import (
    FloatArray,
    HyperParams,
    RateExtrema,
    Regime,
    SlopeDiagnostic,
    TheoryLoss,
)
from mamlrates.moments import g_polynomials, moment_set

logger = logging.getLogger(__name__)

FD_STEP = 1e-6
SLOPE_RTOL = 1e-6


def h_factor(alpha: ArrayLike, n: int, p: int) -> FloatArray:
    """One-step propagation factor (1 - alpha)^2 + alpha^2 (p + 1) / n.

    Strictly positive for every real alpha.

    Args:
        alpha: Learning rate (scalar or array).
        n: Number of points the step is taken on.
        p: Dimension.

    Returns:
        The factor, with the shape of ``alpha``.

    Raises:
        ValueError: If n or p is below 1.
    """
    if n < 1 or p < 1:
        raise ValueError(f"n and p must be >= 1, got n={n}, p={p}")
    a = np.asarray(alpha, dtype=np.float64)
    return (1 - a) ** 2 + a**2 * (p + 1) / n


def require_regime(hp: HyperParams, regime: Regime) -> None:
    """Raise RegimeError unless the dimensions put hp in ``regime``."""
    if hp.regime is not regime:
        relation = ">" if regime is Regime.OVER else "<"
        raise RegimeError(
            f"{regime.value}parameterized formula requires p {relation} n_v*m "
            f"(p={hp.p}, n_v*m={hp.validation_total})"
        )


def _noise_term(hp: HyperParams, alpha_r: ArrayLike) -> FloatArray:
    a_r = np.asarray(alpha_r, dtype=np.float64)
    return hp.sigma**2 / 2 * (1 + a_r**2 * hp.p / hp.n_r)


def _over_bracket(hp: HyperParams, alpha_t: ArrayLike) -> dict[str, FloatArray]:
    """Overparameterized terms multiplied by h^r."""
    a_t = np.asarray(alpha_t, dtype=np.float64)
    ratio = hp.validation_total / hp.p
    h_t = h_factor(a_t, hp.n_t, hp.p)
    return {
        "task_variance": np.asarray(hp.nu**2 / 2 * (1 + ratio)),
        "overfitting": np.asarray(0.5 * (1 - ratio) * hp.init_gap_sq),
        "data_dependent": hp.sigma**2
        * ratio
        / 2
        * (1 + a_t**2 * hp.p / hp.n_t)
        / h_t,
    }


def _under_bracket(hp: HyperParams, alpha_t: ArrayLike) -> dict[str, FloatArray]:
    """Underparameterized terms multiplied by h^r."""
    a_t = np.asarray(alpha_t, dtype=np.float64)
    h_t = h_factor(a_t, hp.n_t, hp.p)
    g1, g2, g3, g4 = g_polynomials(a_t, moment_set(hp.n_t, hp.p))
    noise_part = hp.sigma**2 * (
        h_t + a_t**2 / hp.n_t * ((hp.n_v + 1) * g1 + hp.p * g2)
    )
    variance_part = hp.nu**2 / hp.p * ((hp.n_v + 1) * g3 + hp.p * g4)
    return {
        "task_variance": np.asarray(hp.nu**2 / 2),
        "data_dependent": hp.p
        / hp.validation_total
        * (noise_part + variance_part)
        / (2 * h_t**2),
    }


def _bracket(
    hp: HyperParams, regime: Regime, alpha_t: ArrayLike
) -> dict[str, FloatArray]:
    require_regime(hp, regime)
    if regime is Regime.OVER:
        return _over_bracket(hp, alpha_t)
    return _under_bracket(hp, alpha_t)


def loss_components(
    hp: HyperParams,
    regime: Regime,
    alpha_t: ArrayLike | None = None,
    alpha_r: ArrayLike | None = None,
) -> dict[str, FloatArray]:
    """Named loss components, optionally at overridden (array) learning rates.

    Args:
        hp: Hyperparameters.
        regime: OVER or UNDER; must match the dimensions.
        alpha_t: Training rate(s); defaults to hp.alpha_t.
        alpha_r: Adaptation rate(s); defaults to hp.alpha_r.

    Returns:
        Mapping of component name to value(s). The loss is their sum.

    Raises:
        RegimeError: If the regime does not match p versus n_v*m.
    """
    a_t = hp.alpha_t if alpha_t is None else alpha_t
    a_r = hp.alpha_r if alpha_r is None else alpha_r
    h_r = h_factor(a_r, hp.n_r, hp.p)
    components = {"noise": _noise_term(hp, a_r)}
    for name, value in _bracket(hp, regime, a_t).items():
        components[name] = h_r * value
    return components


def _to_loss(regime: Regime, components: dict[str, FloatArray]) -> TheoryLoss:
    return TheoryLoss.from_breakdown(
        regime, {name: float(value) for name, value in components.items()}
    )


def loss_overparam(hp: HyperParams) -> TheoryLoss:
    """Average test loss for p > n_v m.

    sigma^2/2 (1 + alpha_r^2 p / n_r) + h^r [nu^2/2 (1 + n_v m / p)
    + 1/2 (1 - n_v m / p) |omega0 - w0|^2
    + sigma^2 n_v m / (2p) (1 + alpha_t^2 p / n_t) / h^t]

    Raises:
        RegimeError: If p <= n_v m.
    """
    return _to_loss(Regime.OVER, loss_components(hp, Regime.OVER))


def loss_underparam(hp: HyperParams) -> TheoryLoss:
    """Average test loss for p < n_v m, assembled from the g polynomials.

    Raises:
        RegimeError: If p >= n_v m.
    """
    return _to_loss(Regime.UNDER, loss_components(hp, Regime.UNDER))


def alpha_t_extrema(hp: HyperParams) -> RateExtrema:
    """Stationary points of the overparameterized loss in alpha_t.

    alpha_t^(-/+) = -(n_t + 1)/(2p) -/+ sqrt(((n_t + 1)/(2p))^2 + n_t/p).
    The minimum is always negative and the maximum always positive.

    Raises:
        RegimeError: If p <= n_v m.
    """
    require_regime(hp, Regime.OVER)
    shift = (hp.n_t + 1) / (2 * hp.p)
    root = math.sqrt(shift**2 + hp.n_t / hp.p)
    return RateExtrema(alpha_minus=-shift - root, alpha_plus=-shift + root)


def alpha_r_optimum(hp: HyperParams, regime: Regime) -> float:
    """Exact argmin over alpha_r of the isotropic loss.

    The loss is sigma^2/2 (1 + alpha_r^2 p / n_r) + h^r K with K independent
    of alpha_r, so the stationarity condition is linear:
    alpha_r* = K / (K (1 + (p + 1)/n_r) + sigma^2 p / (2 n_r)).

    Raises:
        RegimeError: If the regime does not match the dimensions.
        FlatObjectiveError: If sigma = 0 and K = 0.
    """
    k = float(sum(_bracket(hp, regime, hp.alpha_t).values()))
    curvature = 1 + (hp.p + 1) / hp.n_r
    denom = k * curvature + hp.sigma**2 * hp.p / (2 * hp.n_r)
    if denom == 0:
        raise FlatObjectiveError("flat objective: the loss does not depend on alpha_r")
    return k / denom


def d_loss_d_alpha_t_at_zero(hp: HyperParams) -> float:
    """Closed-form slope of the underparameterized loss at alpha_t = 0.

    Returned as sigma^2 p / (n_v m), without an h^r factor.

    Raises:
        RegimeError: If p >= n_v m.
    """
    require_regime(hp, Regime.UNDER)
    return hp.sigma**2 * hp.p / hp.validation_total


def finite_difference_slope(hp: HyperParams, step: float = FD_STEP) -> float:
    """Central finite difference of the underparameterized loss at alpha_t = 0.

    Raises:
        RegimeError: If p >= n_v m.
    """
    values = loss_curve(hp, Regime.UNDER, "alpha_t", np.array([-step, step]))
    return float((values[1] - values[0]) / (2 * step))


def slope_diagnostic(hp: HyperParams) -> SlopeDiagnostic:
    """Compare the printed slope at alpha_t = 0 against the finite difference.

    The two disagree by the factor h^r whenever alpha_r != 0.

    Raises:
        RegimeError: If p >= n_v m.
    """
    printed = d_loss_d_alpha_t_at_zero(hp)
    fd = finite_difference_slope(hp)
    scale = max(abs(printed), abs(fd))
    gap = abs(printed - fd) / scale if scale > 0 else 0.0
    consistent = gap <= SLOPE_RTOL
    if not consistent:
        logger.warning(
            "Closed-form slope %.6g differs from finite difference %.6g (gap %.3g)",
            printed,
            fd,
            gap,
        )
    return SlopeDiagnostic(
        printed=printed, finite_difference=fd, relative_gap=gap, consistent=consistent
    )


def loss_curve(
    hp: HyperParams, regime: Regime, axis: str, values: ArrayLike
) -> FloatArray:
    """Loss along one learning-rate axis, vectorized.

    Args:
        hp: Hyperparameters; the other rate is held at its hp value.
        regime: OVER or UNDER.
        axis: "alpha_t" or "alpha_r".
        values: Rates to evaluate.

    Returns:
        Array of losses, one per value.

    Raises:
        ValueError: On an unknown axis.
    """
    rates = np.asarray(values, dtype=np.float64)
    if axis == "alpha_t":
        components = loss_components(hp, regime, alpha_t=rates)
    elif axis == "alpha_r":
        components = loss_components(hp, regime, alpha_r=rates)
    else:
        raise ValueError(f"Unknown sweep axis {axis!r}; expected alpha_t or alpha_r")
    total = np.zeros_like(rates)
    for value in components.values():
        total = total + value
    return total
