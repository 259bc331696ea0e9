"""Exception types for mamlrates.

Each maps onto one CLI exit code (see ``mamlrates.cli``).
"""


class RegimeError(ValueError):
    """Parameters fall outside the regime a formula or solver requires."""


class CovarianceError(ValueError):
    """A covariance matrix is asymmetric, not PSD, or has the wrong shape."""


class FlatObjectiveError(ValueError):
    """The loss does not depend on the learning rate being optimized."""


class IllConditionedError(ArithmeticError):
    """The Gram matrix of the stacked design is numerically singular."""


class DiscardBudgetError(RuntimeError):
    """Too many Monte Carlo runs had to be resampled."""
