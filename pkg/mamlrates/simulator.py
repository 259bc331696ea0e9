"""Empirical one-step MAML on sampled mixed-linear-regression tasks.

A run samples m training tasks, stacks them into the design (B, gamma),
solves the outer loop exactly, then adapts to fresh test tasks with one
step of rate alpha_r and scores the half mean squared error.
"""

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy import linalg

from mamlrates.errors import DiscardBudgetError, IllConditionedError, RegimeError
from mamlrates.generative import sample_task, sample_test_task
from mamlrates.models import (
    ConcentrationReport,
    CovarianceSpec,
    FloatArray,
    HyperParams,
    McEstimate,
    Regime,
    StackedDesign,
    TaskData,
    TestTaskData,
)
from mamlrates.streams import StreamTag, make_stream
from mamlrates.theory.isotropic import h_factor, require_regime

logger = logging.getLogger(__name__)

CHOLESKY_COND_LIMIT = 1e10
SINGULAR_COND_LIMIT = 1e12
DEFAULT_TEST_TASKS = 100
DISCARD_FRACTION = 0.01


def _check_pair(x: FloatArray, y: FloatArray, p: int | None = None) -> None:
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise ValueError(f"Inconsistent data shapes: x {x.shape}, y {y.shape}")
    if p is not None and x.shape[1] != p:
        raise ValueError(f"x has {x.shape[1]} columns, expected p={p}")


def inner_step(
    omega: FloatArray, x: FloatArray, y: FloatArray, alpha: float
) -> FloatArray:
    """One gradient step on the half mean squared error of (x, y).

    Returns (I - alpha/n X^T X) omega + (alpha/n) X^T y.

    Raises:
        ValueError: On inconsistent shapes or empty data.
    """
    omega = np.asarray(omega, dtype=np.float64)
    _check_pair(x, y, omega.shape[0])
    n = x.shape[0]
    if n < 1:
        raise ValueError("inner_step needs at least one data point")
    return omega + (alpha / n) * (x.T @ (y - x @ omega))


def explicit_theta_star(
    omega_star: FloatArray, x_target: FloatArray, y_target: FloatArray, alpha_r: float
) -> FloatArray:
    """Adapted parameters from the explicit matrix form of the adaptation step."""
    _check_pair(x_target, y_target, omega_star.shape[0])
    n = x_target.shape[0]
    step = np.eye(omega_star.shape[0]) - (alpha_r / n) * (x_target.T @ x_target)
    return step @ omega_star + (alpha_r / n) * (x_target.T @ y_target)


def build_design(tasks: Sequence[TaskData], hp: HyperParams) -> StackedDesign:
    """Stack the m training tasks into (B, gamma).

    Block i of B is X_v (I - alpha_t/n_t X_t^T X_t) and block i of gamma is
    y_v - alpha_t/n_t X_v X_t^T y_t, so the meta-training loss is
    |gamma - B omega|^2 / (2 n_v m).

    Raises:
        ValueError: On a task count other than m or inconsistent shapes.
    """
    if len(tasks) != hp.m:
        raise ValueError(f"Expected m={hp.m} tasks, got {len(tasks)}")
    scale = hp.alpha_t / hp.n_t
    eye = np.eye(hp.p)
    blocks: list[FloatArray] = []
    targets: list[FloatArray] = []
    for task in tasks:
        _check_pair(task.x_train, task.y_train, hp.p)
        _check_pair(task.x_val, task.y_val, hp.p)
        blocks.append(task.x_val @ (eye - scale * (task.x_train.T @ task.x_train)))
        shift = task.x_val @ (task.x_train.T @ task.y_train)
        targets.append(task.y_val - scale * shift)
    return StackedDesign(b_matrix=np.vstack(blocks), gamma=np.concatenate(targets))


def meta_loss(omega: FloatArray, design: StackedDesign) -> float:
    """|gamma - B omega|^2 / (2 n_v m)."""
    residual = design.gamma - design.b_matrix @ omega
    return float(residual @ residual) / (2 * design.rows)


def meta_loss_tasks(
    omega: FloatArray, tasks: Sequence[TaskData], hp: HyperParams
) -> float:
    """Meta-training loss as an average over tasks of the post-step validation loss."""
    total = 0.0
    for task in tasks:
        theta = inner_step(omega, task.x_train, task.y_train, hp.alpha_t)
        residual = task.y_val - task.x_val @ theta
        total += float(residual @ residual) / (2 * task.x_val.shape[0])
    return total / len(tasks)


def _condition_number(gram: FloatArray) -> float:
    singular = linalg.svdvals(gram)
    smallest = float(singular[-1])
    if smallest <= 0:
        return math.inf
    return float(singular[0]) / smallest


def solve_outer(
    design: StackedDesign, omega0: FloatArray, regime: Regime
) -> FloatArray:
    """Exact minimizer of the meta-training loss.

    Overparameterized: omega0 + B^T (B B^T)^-1 (gamma - B omega0), the
    minimizer closest to omega0. Underparameterized: (B^T B)^-1 B^T gamma.
    The Gram matrix is factored by Cholesky; above condition number 1e10 the
    pseudo-inverse is used instead.

    Args:
        design: Stacked design.
        omega0: Outer-loop initial condition.
        regime: OVER (or GENERAL) or UNDER; must match the design shape.

    Returns:
        omega*.

    Raises:
        RegimeError: If the regime does not match the design shape.
        IllConditionedError: If the Gram condition number exceeds 1e12.
    """
    b = design.b_matrix
    rows, p = b.shape
    over = regime is not Regime.UNDER
    if over != (p > rows) or p == rows:
        raise RegimeError(
            f"{regime.value} solve does not match design with p={p}, n_v*m={rows}"
        )
    if over:
        gram = b @ b.T
        rhs = design.gamma - b @ omega0
    else:
        gram = b.T @ b
        rhs = b.T @ design.gamma

    cond = _condition_number(gram)
    if cond > SINGULAR_COND_LIMIT:
        raise IllConditionedError(
            f"ill-conditioned design (condition number {cond:.3e})"
        )

    if cond <= CHOLESKY_COND_LIMIT:
        try:
            factor = linalg.cho_factor(gram)
            solved = linalg.cho_solve(factor, rhs)
            return omega0 + b.T @ solved if over else solved
        except linalg.LinAlgError:
            pass
    logger.debug("Gram condition number %.3e, using pseudo-inverse", cond)
    pinv = linalg.pinv(b)
    if over:
        return omega0 + pinv @ rhs
    return pinv @ design.gamma


def adapt_and_test(
    omega_star: FloatArray, test_task: TestTaskData, hp: HyperParams
) -> float:
    """Adapt with one alpha_r step on the target split and score the test split.

    Returns:
        |y_s - X_s theta*|^2 / (2 n_s).
    """
    theta = inner_step(omega_star, test_task.x_target, test_task.y_target, hp.alpha_r)
    _check_pair(test_task.x_test, test_task.y_test, hp.p)
    residual = test_task.y_test - test_task.x_test @ theta
    return float(residual @ residual) / (2 * test_task.x_test.shape[0])


def _single_run(
    hp: HyperParams,
    cov: CovarianceSpec,
    test_tasks: int,
    seed: int,
    index: int,
    attempt: int,
) -> float:
    train_rng = make_stream(seed, StreamTag.META_TRAIN, index, attempt)
    tasks = [sample_task(hp, cov, train_rng) for _ in range(hp.m)]
    omega_star = solve_outer(build_design(tasks, hp), hp.omega0_vector, hp.regime)
    test_rng = make_stream(seed, StreamTag.META_TEST, index, attempt)
    losses = [
        adapt_and_test(omega_star, sample_test_task(hp, cov, test_rng), hp)
        for _ in range(test_tasks)
    ]
    return float(np.mean(losses))


def discard_budget(runs: int) -> int:
    """Maximum number of resampled runs: ceil(1% of runs)."""
    return math.ceil(DISCARD_FRACTION * runs)


def run_experiment(
    hp: HyperParams,
    cov: CovarianceSpec,
    runs: int,
    test_tasks_per_run: int = DEFAULT_TEST_TASKS,
    seed: int = 0,
    threads: int = 1,
) -> McEstimate:
    """Monte Carlo estimate of the average test loss.

    Each run draws from streams keyed by (seed, run index, attempt), so the
    result is bit-identical for any thread count. Runs whose design is
    ill-conditioned are resampled with the next attempt number.

    Args:
        hp: Hyperparameters; the dimensions fix the solver regime.
        cov: Data covariance.
        runs: Independent runs (at least 2).
        test_tasks_per_run: Test tasks averaged inside each run.
        seed: Master seed.
        threads: Worker threads.

    Returns:
        McEstimate with the across-run mean and standard error.

    Raises:
        ValueError: If runs < 2 or test_tasks_per_run < 1.
        DiscardBudgetError: If more than ceil(1% of runs) draws were discarded.
    """
    if runs < 2:
        raise ValueError(f"runs must be >= 2, got {runs}")
    if test_tasks_per_run < 1:
        raise ValueError(f"test_tasks_per_run must be >= 1, got {test_tasks_per_run}")
    cov.check_dimension(hp.p)
    budget = discard_budget(runs)

    def one_run(index: int) -> tuple[float, int]:
        for attempt in range(budget + 1):
            try:
                value = _single_run(hp, cov, test_tasks_per_run, seed, index, attempt)
                return value, attempt
            except IllConditionedError as exc:
                logger.debug("Run %d attempt %d discarded: %s", index, attempt, exc)
        raise DiscardBudgetError(
            f"Run {index} stayed ill-conditioned after {budget + 1} attempts"
        )

    logger.info(
        "Running %d runs x %d test tasks (seed=%d)", runs, test_tasks_per_run, seed
    )
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(one_run, range(runs)))

    discarded = sum(attempts for _, attempts in results)
    if discarded > budget:
        raise DiscardBudgetError(
            f"{discarded} ill-conditioned draws exceed the discard budget of {budget}"
        )
    if discarded:
        logger.warning("Resampled %d ill-conditioned draws", discarded)

    values = np.array([value for value, _ in results])
    mean = float(np.mean(values))
    std_error = float(np.std(values, ddof=1) / math.sqrt(runs))
    logger.info("Finished: mean=%.6g se=%.3g discarded=%d", mean, std_error, discarded)
    return McEstimate(
        mean=mean,
        std_error=std_error,
        runs=runs,
        master_seed=seed,
        discarded_runs=discarded,
    )


def concentration_check(
    hp: HyperParams, samples: int, seed: int
) -> ConcentrationReport:
    """How far B B^T / p sits from h^t I over sampled isotropic designs.

    Args:
        hp: Overparameterized hyperparameters.
        samples: Number of sampled designs.
        seed: Master seed.

    Returns:
        Median and maximum of the per-design max-entry deviation, plus the
        average diagonal and absolute off-diagonal entries.

    Raises:
        RegimeError: If p <= n_v m.
        ValueError: If samples < 1.
    """
    require_regime(hp, Regime.OVER)
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    cov = CovarianceSpec.isotropic()
    h_t = float(h_factor(hp.alpha_t, hp.n_t, hp.p))
    size = hp.validation_total
    off_mask = ~np.eye(size, dtype=bool)
    deviations, diagonals, off_diagonals = [], [], []
    for index in range(samples):
        rng = make_stream(seed, StreamTag.CONCENTRATION, index)
        design = build_design([sample_task(hp, cov, rng) for _ in range(hp.m)], hp)
        gram = design.b_matrix @ design.b_matrix.T / hp.p
        deviations.append(float(np.max(np.abs(gram - h_t * np.eye(size)))))
        diagonals.append(float(np.mean(np.diag(gram))))
        if size > 1:
            off_diagonals.append(float(np.mean(np.abs(gram[off_mask]))))
    return ConcentrationReport(
        h_t=h_t,
        samples=samples,
        median_deviation=float(np.median(deviations)),
        max_deviation=float(np.max(deviations)),
        mean_diagonal=float(np.mean(diagonals)),
        mean_abs_off_diagonal=float(np.mean(off_diagonals)) if off_diagonals else 0.0,
    )
