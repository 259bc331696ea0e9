"""Average test loss for anisotropic, possibly non-Gaussian inputs.

Inputs are described by their second moment Sigma and fourth-moment matrix
F = E[(x^T Sigma x) x x^T]; task parameters by their covariance Sigma_w.
Only the overparameterized regime with zero task mean and zero initial
condition is covered.
"""

import logging

import numpy as np
from scipy import stats

from mamlrates.errors import CovarianceError, FlatObjectiveError
from mamlrates.linalg import as_square_matrix, check_symmetric
from mamlrates.models import (
    CovarianceKind,
    CovarianceSpec,
    FloatArray,
    HMatrix,
    HyperParams,
    Regime,
    TheoryLoss,
)
from mamlrates.streams import StreamTag, make_stream
from mamlrates.theory.isotropic import require_regime

logger = logging.getLogger(__name__)


def gaussian_F(sigma_x: FloatArray) -> FloatArray:
    """Fourth-moment matrix of N(0, Sigma): 2 Sigma^3 + Sigma Tr(Sigma^2).

    Args:
        sigma_x: Symmetric input covariance.

    Returns:
        The p x p matrix F.

    Raises:
        CovarianceError: If sigma_x is not a symmetric square matrix.
    """
    sigma = as_square_matrix(sigma_x, "sigma_x")
    check_symmetric(sigma, "sigma_x")
    sigma2 = sigma @ sigma
    f = 2 * (sigma2 @ sigma) + sigma * float(np.trace(sigma2))
    return 0.5 * (f + f.T)


def _require_general(cov: CovarianceSpec) -> tuple[FloatArray, FloatArray, FloatArray]:
    if (
        cov.kind is not CovarianceKind.GENERAL
        or cov.sigma_x is None
        or cov.sigma_w is None
        or cov.f_matrix is None
    ):
        raise CovarianceError(
            "General-covariance formula needs explicit matrices; "
            "use materialize_isotropic for the isotropic model"
        )
    return cov.sigma_x, cov.sigma_w, cov.f_matrix


def h_matrix(cov: CovarianceSpec, alpha: float, n: int) -> HMatrix:
    """H = Sigma (I - alpha Sigma)^2 + (alpha^2 / n)(F - Sigma^3).

    Reduces to h_factor(alpha, n, p) I for the materialized isotropic model.

    Args:
        cov: GENERAL covariance spec.
        alpha: Inner-loop learning rate.
        n: Points the inner step is taken on.

    Returns:
        Symmetrized HMatrix.

    Raises:
        CovarianceError: For an isotropic spec.
        ValueError: If n < 1.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    sigma, _, f_matrix = _require_general(cov)
    step = np.eye(sigma.shape[0]) - alpha * sigma
    sigma3 = sigma @ sigma @ sigma
    h = sigma @ step @ step + (alpha**2 / n) * (f_matrix - sigma3)
    return HMatrix(matrix=0.5 * (h + h.T), alpha=alpha, n=n)


def wishart_covariances(p: int, nu: float, seed: int) -> CovarianceSpec:
    """One draw of Sigma ~ W(I, p) and Sigma_w ~ (nu^2 / p) W(I, p).

    The two draws use independent keyed streams; F is gaussian_F(Sigma).

    Args:
        p: Dimension and degrees of freedom.
        nu: Task-variability scale.
        seed: Master seed.

    Returns:
        A GENERAL CovarianceSpec.

    Raises:
        ValueError: If p < 1.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    dist = stats.wishart(df=p, scale=np.eye(p))
    draws = []
    for index in range(2):
        rng = make_stream(seed, StreamTag.WISHART, index)
        sample = np.atleast_2d(np.asarray(dist.rvs(random_state=rng), dtype=np.float64))
        draws.append(0.5 * (sample + sample.T))
    sigma_x, raw_w = draws
    logger.debug("Drew Wishart covariances p=%d seed=%d", p, seed)
    return CovarianceSpec.general(
        sigma_x=sigma_x,
        sigma_w=(nu**2 / p) * raw_w,
        f_matrix=gaussian_F(sigma_x),
    )


def _check_inputs(hp: HyperParams, cov: CovarianceSpec) -> None:
    require_regime(hp, Regime.OVER)
    if np.any(hp.w0_vector != 0) or np.any(hp.omega0_vector != 0):
        raise ValueError("General-covariance loss requires omega0 = 0 and w0 = 0")
    _require_general(cov)
    cov.check_dimension(hp.p)


def _propagation(
    hp: HyperParams, cov: CovarianceSpec
) -> tuple[FloatArray, float, float]:
    """(H^t, Q, Tr(H^t)^2) where Q is the bracket multiplying Tr(H^r H^t)."""
    sigma, sigma_w, _ = _require_general(cov)
    h_t = h_matrix(cov, hp.alpha_t, hp.n_t).matrix
    tr_sigma2 = float(np.trace(sigma @ sigma))
    bracket = float(np.trace(sigma_w @ h_t)) + hp.sigma**2 * (
        1 + hp.alpha_t**2 / hp.n_t * tr_sigma2
    )
    return h_t, bracket, float(np.trace(h_t)) ** 2


def loss_general(hp: HyperParams, cov: CovarianceSpec) -> TheoryLoss:
    """Average test loss for general input moments, p > n_v m.

    1/2 Tr(Sigma_w H^r) + sigma^2/2 [1 + alpha_r^2/n_r Tr(Sigma^2)]
    + 1/2 n_v m Tr(H^r H^t) {Tr(Sigma_w H^t)
    + sigma^2 [1 + alpha_t^2/n_t Tr(Sigma^2)]} / Tr(H^t)^2

    Args:
        hp: Hyperparameters with zero w0 and omega0.
        cov: GENERAL covariance spec of dimension p.

    Returns:
        TheoryLoss tagged GENERAL. The data-dependent term is split into
        the part carried by Sigma_w and the part carried by label noise.

    Raises:
        RegimeError: If p <= n_v m.
        CovarianceError: For an isotropic or mis-sized spec.
        ValueError: If w0 or omega0 is nonzero.
    """
    _check_inputs(hp, cov)
    sigma, sigma_w, _ = _require_general(cov)
    tr_sigma2 = float(np.trace(sigma @ sigma))
    h_t, _, trace_sq = _propagation(hp, cov)
    h_r = h_matrix(cov, hp.alpha_r, hp.n_r).matrix
    coupling = 0.5 * hp.validation_total * float(np.trace(h_r @ h_t)) / trace_sq
    breakdown = {
        "noise": hp.sigma**2 / 2 * (1 + hp.alpha_r**2 / hp.n_r * tr_sigma2),
        "task_variance": 0.5 * float(np.trace(sigma_w @ h_r)),
        "propagated_task_variance": coupling * float(np.trace(sigma_w @ h_t)),
        "propagated_noise": coupling
        * hp.sigma**2
        * (1 + hp.alpha_t**2 / hp.n_t * tr_sigma2),
    }
    return TheoryLoss.from_breakdown(Regime.GENERAL, breakdown)


def alpha_r_optimum(hp: HyperParams, cov: CovarianceSpec) -> float:
    """Exact argmin over alpha_r of the general-covariance loss.

    H^r = Sigma - 2 alpha Sigma^2 + alpha^2 [Sigma^3 + (F - Sigma^3)/n_r], so
    the loss is c0 + c1 alpha_r + c2 alpha_r^2 and the optimum is -c1 / (2 c2).

    Raises:
        RegimeError: If p <= n_v m.
        FlatObjectiveError: If the loss has no positive curvature in alpha_r.
    """
    _check_inputs(hp, cov)
    sigma, sigma_w, f_matrix = _require_general(cov)
    h_t, bracket, trace_sq = _propagation(hp, cov)
    sigma2 = sigma @ sigma
    sigma3 = sigma2 @ sigma
    linear = -2 * sigma2
    quadratic = sigma3 + (f_matrix - sigma3) / hp.n_r

    def coefficient(r: FloatArray) -> float:
        return 0.5 * float(np.trace(sigma_w @ r)) + (
            0.5 * hp.validation_total * float(np.trace(r @ h_t)) * bracket / trace_sq
        )

    c1 = coefficient(linear)
    c2 = coefficient(quadratic) + hp.sigma**2 * float(np.trace(sigma2)) / (2 * hp.n_r)
    if not c2 > 0:
        raise FlatObjectiveError("flat objective: the loss does not depend on alpha_r")
    return -c1 / (2 * c2)
