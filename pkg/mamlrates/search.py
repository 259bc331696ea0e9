"""One-dimensional argmin helpers for loss curves."""

from collections.abc import Callable

import numpy as np
from numpy.typing import ArrayLike

from mamlrates.models import FloatArray

DEFAULT_START = -3.0
DEFAULT_STOP = 3.0
DEFAULT_STEP = 1e-4
_REFINE_FACTOR = 100


def grid_points(start: float, stop: float, step: float) -> FloatArray:
    """Evenly spaced points from start to stop inclusive.

    The stop value is included when it lies on the grid within 1e-9 steps.

    Raises:
        ValueError: If step <= 0 or start >= stop.
    """
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    if start >= stop:
        raise ValueError(f"start must be below stop, got [{start}, {stop}]")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(count, dtype=np.float64)


def grid_argmin(
    curve: Callable[[FloatArray], ArrayLike],
    start: float = DEFAULT_START,
    stop: float = DEFAULT_STOP,
    step: float = DEFAULT_STEP,
    refine: bool = True,
) -> float:
    """Argmin of a vectorized curve on a grid, refined once around the minimum.

    Args:
        curve: Maps an array of x values to an array of losses.
        start: Left end of the search interval.
        stop: Right end of the search interval.
        step: Coarse grid step.
        refine: Search [x* - step, x* + step] again with step / 100.

    Returns:
        The x value of the smallest loss found.
    """
    xs = grid_points(start, stop, step)
    best = float(xs[int(np.argmin(np.asarray(curve(xs))))])
    if not refine:
        return best
    lo = max(start, best - step)
    hi = min(stop, best + step)
    fine = grid_points(lo, hi, step / _REFINE_FACTOR)
    return float(fine[int(np.argmin(np.asarray(curve(fine))))])


def quadratic_fit_argmin(xs: ArrayLike, ys: ArrayLike) -> float:
    """Vertex of a parabola fitted to the empirical minimum and its neighbours.

    Falls back to the empirical argmin when fewer than three points exist
    or the local fit is not convex.

    Args:
        xs: Sorted grid values.
        ys: Noisy losses at those values.

    Returns:
        Estimated argmin.
    """
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    i = int(np.argmin(y))
    if x.size < 3:
        return float(x[i])
    lo = min(max(i - 1, 0), x.size - 3)
    a, b, _ = np.polyfit(x[lo : lo + 3], y[lo : lo + 3], 2)
    if a <= 0:
        return float(x[i])
    return float(-b / (2 * a))
