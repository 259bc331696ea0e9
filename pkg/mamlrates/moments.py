"""Wishart moment identities and a brute-force Monte Carlo oracle.

For X an n x p standard Gaussian matrix, the expectations of powers and
traced powers of X^T X are multiples of the identity. The normalized
multipliers (the mu quantities) assemble the underparameterized loss
through the g polynomials.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from enum import StrEnum
from typing import TypeVar

import numpy as np

from mamlrates.models import FloatArray, MomentCheck, MomentEstimate, MomentSet
from mamlrates.streams import StreamTag, make_stream

logger = logging.getLogger(__name__)

DEFAULT_BATCH_SIZE = 20_000
DEFAULT_K_SE = 4.0

RateT = TypeVar("RateT", float, FloatArray)


class MomentExpr(StrEnum):
    """Matrix functionals of X whose expectation has a closed form."""

    XTX = "XtX"
    XTX2 = "(XtX)^2"
    XTX3 = "(XtX)^3"
    XTX4 = "(XtX)^4"
    XTX_TR = "XtX*Tr(XtX)"
    XTX2_TR = "(XtX)^2*Tr(XtX)"
    XTX_TR2 = "XtX*Tr((XtX)^2)"
    XTX2_TR2 = "(XtX)^2*Tr((XtX)^2)"
    XTCX = "XtCX"
    XTXDXTX = "XtX*D*XtX"


# The eight identities that need no auxiliary matrix.
POWER_IDENTITIES: tuple[MomentExpr, ...] = (
    MomentExpr.XTX,
    MomentExpr.XTX2,
    MomentExpr.XTX3,
    MomentExpr.XTX4,
    MomentExpr.XTX_TR,
    MomentExpr.XTX2_TR,
    MomentExpr.XTX_TR2,
    MomentExpr.XTX2_TR2,
)


def _check_counts(n: int, p: int) -> None:
    if n < 1 or p < 1:
        raise ValueError(f"n and p must be >= 1, got n={n}, p={p}")


def moment_set(n: int, p: int) -> MomentSet:
    """Closed-form normalized Wishart moments for an n x p Gaussian matrix.

    Numerators are evaluated in exact integer arithmetic and divided once.

    Args:
        n: Number of rows (samples).
        p: Number of columns (dimension).

    Returns:
        MomentSet with mu2, mu3, mu4, mu11, mu21 (= mu12) and mu22.

    Raises:
        ValueError: If n or p is below 1.
    """
    _check_counts(n, p)
    return MomentSet(
        mu2=(n + p + 1) / n,
        mu3=(n**2 + p**2 + 3 * n * p + 3 * n + 3 * p + 4) / n**2,
        mu4=(
            n**3
            + p**3
            + 6 * n**2 * p
            + 6 * n * p**2
            + 6 * n**2
            + 6 * p**2
            + 17 * n * p
            + 21 * n
            + 21 * p
            + 20
        )
        / n**3,
        mu11=(n**2 * p + 2 * n) / (n**2 * p),
        mu21=(n**2 * p + n * p**2 + n * p + 4 * n + 4 * p + 4) / (n**2 * p),
        mu22=(
            n**3 * p
            + n * p**3
            + 2 * n**2 * p**2
            + 2 * n**2 * p
            + 2 * n * p**2
            + 8 * n**2
            + 8 * p**2
            + 21 * n * p
            + 20 * n
            + 20 * p
            + 20
        )
        / (n**3 * p),
    )


def g_polynomials(
    alpha_t: RateT, ms: MomentSet
) -> tuple[RateT, RateT, RateT, RateT]:
    """Polynomials in alpha_t that assemble the underparameterized loss.

    Args:
        alpha_t: Training inner-loop learning rate (scalar or array).
        ms: Moments for (n_t, p).

    Returns:
        (g1, g2, g3, g4); all equal 1 at alpha_t = 0.
    """
    a = alpha_t
    g1 = 1 - 2 * a * ms.mu2 + a**2 * ms.mu3
    g2 = 1 - 2 * a * ms.mu11 + a**2 * ms.mu21
    g3 = 1 - 4 * a + 6 * a**2 * ms.mu2 - 4 * a**3 * ms.mu3 + a**4 * ms.mu4
    g4 = (
        1
        - 4 * a
        + 2 * a**2 * ms.mu2
        + 4 * a**2 * ms.mu11
        - 4 * a**3 * ms.mu21
        + a**4 * ms.mu22
    )
    return g1, g2, g3, g4


def _aux_matrix(
    expr: MomentExpr, c: FloatArray | None, d: FloatArray | None, n: int, p: int
) -> FloatArray | None:
    if expr is MomentExpr.XTCX:
        if c is None:
            raise ValueError("XtCX requires a symmetric n x n matrix C")
        aux = np.asarray(c, dtype=np.float64)
        size = n
    elif expr is MomentExpr.XTXDXTX:
        if d is None:
            raise ValueError("XtX*D*XtX requires a symmetric p x p matrix D")
        aux = np.asarray(d, dtype=np.float64)
        size = p
    else:
        return None
    if aux.shape != (size, size):
        raise ValueError(
            f"{expr.value} needs a {size} x {size} matrix, got {aux.shape}"
        )
    return aux


def closed_form_moment(
    n: int,
    p: int,
    expr: MomentExpr,
    c: FloatArray | None = None,
    d: FloatArray | None = None,
) -> FloatArray:
    """Exact expectation of a moment functional.

    Args:
        n: Number of rows of X.
        p: Number of columns of X.
        expr: Which functional.
        c: n x n matrix for XtCX.
        d: p x p matrix for XtX*D*XtX.

    Returns:
        The p x p expected matrix.

    Raises:
        ValueError: On bad counts or a missing/misshaped auxiliary matrix.
    """
    _check_counts(n, p)
    expr = MomentExpr(expr)
    aux = _aux_matrix(expr, c, d, n, p)
    eye = np.eye(p)
    if aux is not None:
        if expr is MomentExpr.XTCX:
            return float(np.trace(aux)) * eye
        return n * (n + 1) * aux + n * float(np.trace(aux)) * eye
    ms = moment_set(n, p)
    scale = {
        MomentExpr.XTX: n,
        MomentExpr.XTX2: n**2 * ms.mu2,
        MomentExpr.XTX3: n**3 * ms.mu3,
        MomentExpr.XTX4: n**4 * ms.mu4,
        MomentExpr.XTX_TR: p * n**2 * ms.mu11,
        MomentExpr.XTX2_TR: p * n**3 * ms.mu21,
        MomentExpr.XTX_TR2: p * n**3 * ms.mu12,
        MomentExpr.XTX2_TR2: p * n**4 * ms.mu22,
    }[expr]
    return scale * eye


def _functional(
    x: FloatArray, expr: MomentExpr, aux: FloatArray | None
) -> FloatArray:
    """Evaluate the functional on a batch of matrices of shape (b, n, p)."""
    xt = np.swapaxes(x, 1, 2)
    if expr is MomentExpr.XTCX:
        assert aux is not None
        return xt @ aux @ x
    w = xt @ x
    if expr is MomentExpr.XTX:
        return w
    if expr is MomentExpr.XTXDXTX:
        assert aux is not None
        return w @ aux @ w
    w2 = w @ w
    if expr is MomentExpr.XTX2:
        return w2
    if expr is MomentExpr.XTX3:
        return w2 @ w
    if expr is MomentExpr.XTX4:
        return w2 @ w2
    tr1 = np.trace(w, axis1=1, axis2=2)[:, None, None]
    tr2 = np.trace(w2, axis1=1, axis2=2)[:, None, None]
    if expr is MomentExpr.XTX_TR:
        return w * tr1
    if expr is MomentExpr.XTX2_TR:
        return w2 * tr1
    if expr is MomentExpr.XTX_TR2:
        return w * tr2
    return w2 * tr2


def _batch_stats(
    n: int,
    p: int,
    expr: MomentExpr,
    aux: FloatArray | None,
    size: int,
    seed: int,
    batch_index: int,
) -> tuple[int, FloatArray, FloatArray]:
    rng = make_stream(seed, StreamTag.MOMENTS, batch_index)
    values = _functional(rng.standard_normal((size, n, p)), expr, aux)
    mean = values.mean(axis=0)
    m2 = ((values - mean) ** 2).sum(axis=0)
    return size, mean, m2


def mc_moment(
    n: int,
    p: int,
    expr: MomentExpr,
    samples: int,
    seed: int,
    c: FloatArray | None = None,
    d: FloatArray | None = None,
    batch_size: int = DEFAULT_BATCH_SIZE,
    threads: int = 1,
) -> MomentEstimate:
    """Monte Carlo estimate of a moment functional over standard Gaussian X.

    Batches use independent keyed streams and are merged in batch order
    with the pairwise mean/variance update, so the result does not depend
    on ``threads``.

    Args:
        n: Number of rows of X.
        p: Number of columns of X.
        expr: Which functional.
        samples: Number of sampled matrices (at least 2).
        seed: Master seed.
        c: n x n matrix for XtCX.
        d: p x p matrix for XtX*D*XtX.
        batch_size: Matrices drawn per batch.
        threads: Worker threads for batches.

    Returns:
        Entrywise mean and standard error.

    Raises:
        ValueError: On an unknown functional, bad counts, or missing
            auxiliary matrix.
    """
    _check_counts(n, p)
    try:
        expr = MomentExpr(expr)
    except ValueError:
        valid = ", ".join(e.value for e in MomentExpr)
        raise ValueError(
            f"Unknown moment expression {expr!r}. Valid: {valid}"
        ) from None
    if samples < 2:
        raise ValueError("mc_moment needs at least 2 samples")
    aux = _aux_matrix(expr, c, d, n, p)

    sizes = [batch_size] * (samples // batch_size)
    if samples % batch_size:
        sizes.append(samples % batch_size)

    def run(index: int) -> tuple[int, FloatArray, FloatArray]:
        return _batch_stats(n, p, expr, aux, sizes[index], seed, index)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        batches = list(pool.map(run, range(len(sizes))))

    count, mean, m2 = batches[0]
    for size, batch_mean, batch_m2 in batches[1:]:
        total = count + size
        delta = batch_mean - mean
        mean = mean + delta * (size / total)
        m2 = m2 + batch_m2 + delta**2 * (count * size / total)
        count = total

    std_error = np.sqrt(m2 / (count - 1) / count)
    logger.debug("mc_moment %s n=%d p=%d samples=%d", expr.value, n, p, count)
    return MomentEstimate(mean=mean, std_error=std_error, samples=count)


def max_z_score(estimate: MomentEstimate, expected: FloatArray) -> float:
    """Largest entrywise |mean - expected| / std_error."""
    diff = np.abs(estimate.mean - expected)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(estimate.std_error > 0, diff / estimate.std_error, np.inf)
    z = np.where(diff == 0, 0.0, z)
    return float(np.max(z))


def validate_moments(
    n: int,
    p: int,
    samples: int,
    seed: int,
    k: float = DEFAULT_K_SE,
    threads: int = 1,
) -> list[MomentCheck]:
    """Compare every power identity against the Monte Carlo oracle.

    Args:
        n: Number of rows of X.
        p: Number of columns of X.
        samples: Sampled matrices per identity.
        seed: Master seed; each identity gets its own offset seed.
        k: Pass threshold in standard errors.
        threads: Worker threads per identity.

    Returns:
        One MomentCheck per identity, in POWER_IDENTITIES order.
    """
    checks: list[MomentCheck] = []
    for offset, expr in enumerate(POWER_IDENTITIES):
        expected = closed_form_moment(n, p, expr)
        estimate = mc_moment(n, p, expr, samples, seed + offset, threads=threads)
        z = max_z_score(estimate, expected)
        checks.append(
            MomentCheck(
                expr=expr.value,
                n=n,
                p=p,
                closed_form=float(expected[0, 0]),
                mc_diagonal=float(np.mean(np.diag(estimate.mean))),
                max_z=z,
                passed=z <= k,
            )
        )
        if z > k:
            logger.warning(
                "%s (n=%d, p=%d) deviates by %.2f SE from its closed form",
                expr.value,
                n,
                p,
                z,
            )
    return checks
