"""Data models for mamlrates.

Defines the core domain types: HyperParams, CovarianceSpec, sampled task
data, and the result types returned by the theory and simulation modules.
Scalar records are pydantic models; records that carry numpy arrays are
frozen dataclasses.
"""

from dataclasses import dataclass
from enum import StrEnum
from functools import cached_property
from typing import Any

import numpy as np
from numpy.typing import NDArray
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    FiniteFloat,
    computed_field,
    model_validator,
)

from mamlrates.errors import CovarianceError, RegimeError
from mamlrates.linalg import as_square_matrix, check_symmetric, symmetric_sqrt

FloatArray = NDArray[np.float64]


class Regime(StrEnum):
    """Which closed-form loss applies."""

    OVER = "over"
    UNDER = "under"
    GENERAL = "general"


class CovarianceKind(StrEnum):
    """Isotropic Gaussian inputs or explicit second/fourth moments."""

    ISOTROPIC = "isotropic"
    GENERAL = "general"


class HyperParams(BaseModel):
    """All scalar experiment knobs plus the task-mean and initial-condition vectors.

    ``w0`` and ``omega0`` default to the zero vector; a scalar is broadcast
    to a constant vector of length ``p``.
    """

    model_config = ConfigDict(frozen=True)

    n_t: int = Field(ge=1)
    n_v: int = Field(ge=1)
    n_r: int = Field(ge=1)
    n_s: int = Field(default=50, ge=1)
    m: int = Field(ge=1)
    p: int = Field(ge=1)
    alpha_t: FiniteFloat = 0.0
    alpha_r: FiniteFloat = 0.0
    sigma: FiniteFloat = Field(default=0.0, ge=0.0)
    nu: FiniteFloat = Field(default=0.0, ge=0.0)
    w0: tuple[FiniteFloat, ...] = ()
    omega0: tuple[FiniteFloat, ...] = ()

    @model_validator(mode="before")
    @classmethod
    def _expand_vectors(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        p = data.get("p")
        if not isinstance(p, int) or p < 1:
            return data
        data = dict(data)
        for key in ("w0", "omega0"):
            value = data.get(key)
            if value is None or (isinstance(value, (tuple, list)) and not value):
                data[key] = (0.0,) * p
            elif isinstance(value, (int, float)):
                data[key] = (float(value),) * p
        return data

    @model_validator(mode="after")
    def _check_shapes(self) -> "HyperParams":
        for key in ("w0", "omega0"):
            length = len(getattr(self, key))
            if length != self.p:
                raise ValueError(f"{key} has length {length}, expected p={self.p}")
        if self.p == self.n_v * self.m:
            raise RegimeError("regime boundary p == n_v*m unsupported")
        return self

    @property
    def validation_total(self) -> int:
        """Total number of validation points across tasks, n_v * m."""
        return self.n_v * self.m

    @property
    def regime(self) -> Regime:
        """Dimension regime: OVER if p > n_v*m, UNDER if p < n_v*m."""
        return Regime.OVER if self.p > self.validation_total else Regime.UNDER

    @property
    def w0_vector(self) -> FloatArray:
        """Task mean as a numpy vector."""
        return np.asarray(self.w0, dtype=np.float64)

    @property
    def omega0_vector(self) -> FloatArray:
        """Outer-loop initial condition as a numpy vector."""
        return np.asarray(self.omega0, dtype=np.float64)

    @property
    def init_gap_sq(self) -> float:
        """Squared distance |omega0 - w0|^2."""
        return float(np.sum((self.omega0_vector - self.w0_vector) ** 2))

    def replace(self, **changes: Any) -> "HyperParams":
        """Return a revalidated copy with some fields changed."""
        return HyperParams.model_validate({**self.model_dump(), **changes})


@dataclass(frozen=True, eq=False)
class CovarianceSpec:
    """Input/weight second moments and input fourth moments.

    The ISOTROPIC kind carries no matrices; samplers and theory use the
    identity model directly. ``materialize_isotropic`` converts it into the
    equivalent GENERAL spec.
    """

    kind: CovarianceKind
    sigma_x: FloatArray | None = None
    sigma_w: FloatArray | None = None
    f_matrix: FloatArray | None = None

    def __post_init__(self) -> None:
        if self.kind is CovarianceKind.ISOTROPIC:
            return
        names = ("sigma_x", "sigma_w", "f_matrix")
        for name in names:
            value = getattr(self, name)
            if value is None:
                raise CovarianceError(f"General covariance requires {name}")
            object.__setattr__(self, name, as_square_matrix(value, name))
        shapes = {getattr(self, name).shape for name in names}
        if len(shapes) != 1:
            raise CovarianceError(f"Covariance matrices disagree in shape: {shapes}")
        for name in names:
            # F grows like Sigma^3; its rounding error scales with its entries.
            check_symmetric(getattr(self, name), name, relative=name == "f_matrix")

    @classmethod
    def isotropic(cls) -> "CovarianceSpec":
        """The identity-covariance Gaussian model."""
        return cls(kind=CovarianceKind.ISOTROPIC)

    @classmethod
    def general(
        cls,
        sigma_x: Any,
        sigma_w: Any,
        f_matrix: Any,
    ) -> "CovarianceSpec":
        """Build a GENERAL spec from explicit matrices."""
        return cls(
            kind=CovarianceKind.GENERAL,
            sigma_x=sigma_x,
            sigma_w=sigma_w,
            f_matrix=f_matrix,
        )

    @property
    def dim(self) -> int | None:
        """Matrix dimension, or None for the isotropic kind."""
        if self.sigma_x is None:
            return None
        return int(self.sigma_x.shape[0])

    def check_dimension(self, p: int) -> None:
        """Raise CovarianceError if the matrices are not p x p."""
        if self.dim is not None and self.dim != p:
            raise CovarianceError(
                f"Covariance has dimension {self.dim}, expected p={p}"
            )

    @cached_property
    def input_factor(self) -> FloatArray:
        """Symmetric square root of sigma_x."""
        if self.sigma_x is None:
            raise CovarianceError("Isotropic covariance has no explicit factor")
        return symmetric_sqrt(self.sigma_x, "sigma_x")

    @cached_property
    def weight_factor(self) -> FloatArray:
        """Symmetric square root of sigma_w."""
        if self.sigma_w is None:
            raise CovarianceError("Isotropic covariance has no explicit factor")
        return symmetric_sqrt(self.sigma_w, "sigma_w")


@dataclass(frozen=True, eq=False)
class TaskData:
    """One meta-training task: generating parameter plus train/validation splits."""

    w: FloatArray
    x_train: FloatArray
    y_train: FloatArray
    x_val: FloatArray
    y_val: FloatArray


@dataclass(frozen=True, eq=False)
class TestTaskData:
    """One meta-test task: parameter w' plus target (adaptation) and test splits."""

    __test__ = False  # not a pytest class

    w_prime: FloatArray
    x_target: FloatArray
    y_target: FloatArray
    x_test: FloatArray
    y_test: FloatArray


@dataclass(frozen=True, eq=False)
class StackedDesign:
    """The stacked meta-training design: loss(omega) = |gamma - B omega|^2 / 2N."""

    b_matrix: FloatArray
    gamma: FloatArray

    @property
    def rows(self) -> int:
        """Number of stacked validation rows, n_v * m."""
        return int(self.b_matrix.shape[0])


@dataclass(frozen=True, eq=False)
class HMatrix:
    """Matrix generalization of the h factor, built for one (alpha, n)."""

    matrix: FloatArray
    alpha: float
    n: int


@dataclass(frozen=True, eq=False)
class MomentEstimate:
    """Entrywise Monte Carlo mean and standard error of a p x p moment."""

    mean: FloatArray
    std_error: FloatArray
    samples: int


class MomentSet(BaseModel):
    """Normalized Wishart moments mu for a given (n, p)."""

    model_config = ConfigDict(frozen=True)

    mu2: float
    mu3: float
    mu4: float
    mu11: float
    mu21: float
    mu22: float

    @property
    def mu12(self) -> float:
        """Equal to mu21: both traced third-order moments share one formula."""
        return self.mu21


class TheoryLoss(BaseModel):
    """A closed-form average test loss with its named components."""

    model_config = ConfigDict(frozen=True)

    value: float
    regime: Regime
    breakdown: dict[str, float] = Field(default_factory=dict)

    @classmethod
    def from_breakdown(
        cls, regime: Regime, breakdown: dict[str, float]
    ) -> "TheoryLoss":
        """Build a loss whose value is the sum of its components."""
        return cls(value=sum(breakdown.values()), regime=regime, breakdown=breakdown)


class RateExtrema(BaseModel):
    """Stationary points of the loss in the learning rates."""

    model_config = ConfigDict(frozen=True)

    alpha_minus: float | None = None
    alpha_plus: float | None = None
    alpha_r_star: float | None = None


class SlopeDiagnostic(BaseModel):
    """The printed d loss / d alpha_t at zero next to a finite-difference value."""

    printed: float
    finite_difference: float
    relative_gap: float
    consistent: bool


class McEstimate(BaseModel):
    """Monte Carlo mean and standard error over independent runs."""

    model_config = ConfigDict(frozen=True)

    mean: float
    std_error: float = Field(ge=0.0)
    runs: int = Field(ge=2)
    master_seed: int = Field(ge=0)
    discarded_runs: int = Field(default=0, ge=0)


class ConcentrationReport(BaseModel):
    """Deviation of B B^T / p from h^t I over sampled designs."""

    h_t: float
    samples: int
    median_deviation: float
    max_deviation: float
    mean_diagonal: float
    mean_abs_off_diagonal: float


class MomentCheck(BaseModel):
    """Closed-form vs Monte Carlo comparison for one moment identity."""

    expr: str
    n: int
    p: int
    closed_form: float
    mc_diagonal: float
    max_z: float
    passed: bool


class SweepRow(BaseModel):
    """One grid point of a learning-rate sweep."""

    axis_value: float
    theory_loss: float
    mc_mean: float
    mc_stderr: float
    runs: int
    discarded_runs: int = 0


class TheoryReport(BaseModel):
    """Everything the theory command prints for one configuration."""

    loss: TheoryLoss
    extrema: RateExtrema
    slope: SlopeDiagnostic | None = None
    init_gap_sq: float = 0.0


class ComparePoint(BaseModel):
    """Theory against Monte Carlo at one grid point."""

    axis_value: float
    theory_loss: float
    mc_mean: float
    mc_stderr: float
    z_score: float
    within_tolerance: bool


class CompareReport(BaseModel):
    """Outcome of a theory-versus-simulation comparison over a grid."""

    scenario: str
    axis: str
    tolerance_se: float
    points: list[ComparePoint]
    theory_argmin: float
    mc_argmin: float

    @computed_field  # type: ignore[prop-decorator]
    @property
    def passed(self) -> bool:
        """True iff every grid point is within tolerance."""
        return all(point.within_tolerance for point in self.points)
