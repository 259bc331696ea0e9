"""Tests for grid search and argmin estimation."""

import numpy as np
import pytest

from mamlrates.search import grid_argmin, grid_points, quadratic_fit_argmin
from mamlrates.streams import StreamTag, make_stream


class TestGridPoints:
    """Tests for grid_points."""

    def test_inclusive_endpoints(self) -> None:
        """[-1, 1] with step 0.25 has nine points."""
        points = grid_points(-1.0, 1.0, 0.25)
        assert points.size == 9
        assert points[0] == -1.0
        assert points[-1] == pytest.approx(1.0)

    def test_uneven_step(self) -> None:
        """A stop off the grid is not included."""
        assert grid_points(0.0, 1.0, 0.3).size == 4

    def test_bad_step(self) -> None:
        """Non-positive steps are rejected."""
        with pytest.raises(ValueError, match="step must be positive"):
            grid_points(0.0, 1.0, 0.0)

    def test_bad_interval(self) -> None:
        """start must be below stop."""
        with pytest.raises(ValueError, match="start must be below stop"):
            grid_points(1.0, 1.0, 0.1)


class TestGridArgmin:
    """Tests for grid_argmin."""

    def test_parabola(self) -> None:
        """The refined grid finds a parabola vertex to within the fine step."""
        result = grid_argmin(lambda x: (x - 0.123456) ** 2)
        assert result == pytest.approx(0.123456, abs=2e-6)

    def test_coarse_only(self) -> None:
        """Without refinement the result lies on the coarse grid."""
        result = grid_argmin(lambda x: (x - 0.3) ** 2, step=0.25, refine=False)
        assert result == pytest.approx(0.25)

    def test_boundary_minimum(self) -> None:
        """A monotone curve returns the interval edge."""
        assert grid_argmin(lambda x: x, start=-1.0, stop=1.0) == -1.0


class TestQuadraticFitArgmin:
    """Tests for quadratic_fit_argmin."""

    def test_exact_parabola(self) -> None:
        """A noiseless parabola is recovered off the grid."""
        xs = np.linspace(-1.0, 1.0, 9)
        assert quadratic_fit_argmin(xs, (xs - 0.1) ** 2) == pytest.approx(0.1)

    def test_noisy_parabola(self) -> None:
        """Small noise moves the estimate only slightly."""
        xs = np.linspace(-1.0, 1.0, 21)
        noise = make_stream(0, StreamTag.SAMPLING).normal(0.0, 1e-4, xs.size)
        assert quadratic_fit_argmin(xs, (xs + 0.37) ** 2 + noise) == pytest.approx(
            -0.37, abs=0.02
        )

    def test_concave_falls_back(self) -> None:
        """A non-convex local fit returns the empirical argmin."""
        xs = np.array([0.0, 1.0, 2.0, 3.0])
        ys = np.array([0.0, 3.0, 4.0, 4.5])
        assert quadratic_fit_argmin(xs, ys) == 0.0

    def test_too_few_points(self) -> None:
        """Two points return the smaller one."""
        assert quadratic_fit_argmin([0.0, 1.0], [2.0, 1.0]) == 1.0


class TestStreams:
    """Tests for keyed random streams."""

    def test_keys_are_independent(self) -> None:
        """Different tags, indices and attempts give different draws."""
        base = make_stream(1, StreamTag.META_TRAIN, 0, 0).random()
        assert make_stream(1, StreamTag.META_TEST, 0, 0).random() != base
        assert make_stream(1, StreamTag.META_TRAIN, 1, 0).random() != base
        assert make_stream(1, StreamTag.META_TRAIN, 0, 1).random() != base
        assert make_stream(1, StreamTag.META_TRAIN, 0, 0).random() == base

    def test_negative_key(self) -> None:
        """Negative seeds are rejected."""
        with pytest.raises(ValueError, match="non-negative"):
            make_stream(-1, StreamTag.SAMPLING)
