"""Mixed linear regression data-generating process.

Each task draws a parameter w around the task mean, Gaussian inputs and
labels y = X w + z. Isotropic tasks use x ~ N(0, I) and
w ~ N(w0, nu^2/p I); general tasks use x ~ N(0, Sigma) and w ~ N(0, Sigma_w).
"""

import math

import numpy as np

from mamlrates.models import (
    CovarianceKind,
    CovarianceSpec,
    FloatArray,
    HyperParams,
    TaskData,
    TestTaskData,
)


def _draw_weights(
    hp: HyperParams, cov: CovarianceSpec, rng: np.random.Generator
) -> FloatArray:
    noise = rng.standard_normal(hp.p)
    if cov.kind is CovarianceKind.ISOTROPIC:
        return hp.w0_vector + (hp.nu / math.sqrt(hp.p)) * noise
    # General mode is zero-mean: w0 is ignored.
    return cov.weight_factor @ noise


def _draw_inputs(
    n: int, p: int, cov: CovarianceSpec, rng: np.random.Generator
) -> FloatArray:
    raw = rng.standard_normal((n, p))
    if cov.kind is CovarianceKind.ISOTROPIC:
        return raw
    return raw @ cov.input_factor


def _draw_labels(
    x: FloatArray, w: FloatArray, sigma: float, rng: np.random.Generator
) -> FloatArray:
    return x @ w + sigma * rng.standard_normal(x.shape[0])


def sample_task(
    hp: HyperParams, cov: CovarianceSpec, rng: np.random.Generator
) -> TaskData:
    """Draw one meta-training task.

    Args:
        hp: Hyperparameters (uses p, n_t, n_v, sigma, nu, w0).
        cov: Covariance description; matrices must be p x p and PSD.
        rng: Random stream; draws are consumed in a fixed order.

    Returns:
        TaskData with the generating w and train/validation splits.

    Raises:
        CovarianceError: On dimension mismatch or non-PSD covariance.
    """
    cov.check_dimension(hp.p)
    w = _draw_weights(hp, cov, rng)
    x_train = _draw_inputs(hp.n_t, hp.p, cov, rng)
    y_train = _draw_labels(x_train, w, hp.sigma, rng)
    x_val = _draw_inputs(hp.n_v, hp.p, cov, rng)
    y_val = _draw_labels(x_val, w, hp.sigma, rng)
    return TaskData(w=w, x_train=x_train, y_train=y_train, x_val=x_val, y_val=y_val)


def sample_test_task(
    hp: HyperParams, cov: CovarianceSpec, rng: np.random.Generator
) -> TestTaskData:
    """Draw one meta-test task with target (n_r) and test (n_s) splits.

    Args:
        hp: Hyperparameters (uses p, n_r, n_s, sigma, nu, w0).
        cov: Covariance description; matrices must be p x p and PSD.
        rng: Random stream; draws are consumed in a fixed order.

    Returns:
        TestTaskData sharing one fresh parameter w'.

    Raises:
        CovarianceError: On dimension mismatch or non-PSD covariance.
    """
    cov.check_dimension(hp.p)
    w_prime = _draw_weights(hp, cov, rng)
    x_target = _draw_inputs(hp.n_r, hp.p, cov, rng)
    y_target = _draw_labels(x_target, w_prime, hp.sigma, rng)
    x_test = _draw_inputs(hp.n_s, hp.p, cov, rng)
    y_test = _draw_labels(x_test, w_prime, hp.sigma, rng)
    return TestTaskData(
        w_prime=w_prime,
        x_target=x_target,
        y_target=y_target,
        x_test=x_test,
        y_test=y_test,
    )


def materialize_isotropic(hp: HyperParams) -> CovarianceSpec:
    """Express the isotropic model as explicit matrices.

    Returns Sigma = I, Sigma_w = (nu^2/p) I and F = (p + 2) I, the Gaussian
    fourth-moment matrix for identity covariance.

    Args:
        hp: Hyperparameters (uses p and nu).

    Returns:
        A GENERAL-kind CovarianceSpec.
    """
    eye = np.eye(hp.p)
    return CovarianceSpec.general(
        sigma_x=eye,
        sigma_w=(hp.nu**2 / hp.p) * eye,
        f_matrix=(hp.p + 2) * eye,
    )
