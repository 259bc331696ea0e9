"""Shared matrix utilities for mamlrates.

Used by the models, the samplers and the theory modules for consistent
shape, symmetry and PSD handling across the codebase.
"""

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg

from mamlrates.errors import CovarianceError

SYMMETRY_TOL = 1e-10
EIGEN_CLAMP_TOL = 1e-10


def as_square_matrix(value: ArrayLike, name: str = "matrix") -> NDArray[np.float64]:
    """Convert input to a read-only float64 square matrix.

    Args:
        value: Array-like input.
        name: Name used in error messages.

    Returns:
        A read-only copy of the input as a 2-D float64 array.

    Raises:
        CovarianceError: If the input is not a non-empty square matrix or
            contains non-finite values.
    """
    arr = np.array(value, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise CovarianceError(f"{name} must be a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise CovarianceError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


def max_asymmetry(matrix: NDArray[np.float64]) -> float:
    """Return the largest absolute difference between a matrix and its transpose."""
    return float(np.max(np.abs(matrix - matrix.T)))


def check_symmetric(
    matrix: NDArray[np.float64],
    name: str = "matrix",
    tol: float = SYMMETRY_TOL,
    relative: bool = False,
) -> None:
    """Raise if a matrix is not symmetric within a tolerance.

    Args:
        matrix: Square matrix to check.
        name: Name used in error messages.
        tol: Maximum allowed asymmetry.
        relative: Scale ``tol`` by max(1, max|matrix|).

    Raises:
        CovarianceError: If the asymmetry exceeds the tolerance.
    """
    asym = max_asymmetry(matrix)
    if relative:
        tol *= max(1.0, float(np.max(np.abs(matrix))))
    if asym > tol:
        raise CovarianceError(f"{name} is not symmetric (max asymmetry {asym:.3e})")


def symmetric_sqrt(
    matrix: NDArray[np.float64], name: str = "matrix"
) -> NDArray[np.float64]:
    """Symmetric square root of a PSD matrix via eigendecomposition.

    Eigenvalues in [-1e-10, 0] are clamped to zero; anything more negative
    is rejected.

    Args:
        matrix: Symmetric positive-semidefinite matrix.
        name: Name used in error messages.

    Returns:
        Symmetric matrix S with S @ S equal to the input.

    Raises:
        CovarianceError: If the matrix has an eigenvalue below -1e-10.
    """
    sym = 0.5 * (matrix + matrix.T)
    eigvals, eigvecs = linalg.eigh(sym)
    if eigvals[0] < -EIGEN_CLAMP_TOL:
        raise CovarianceError(
            f"{name} is not positive semidefinite (min eigenvalue {eigvals[0]:.3e})"
        )
    roots = np.sqrt(np.clip(eigvals, 0.0, None))
    root: NDArray[np.float64] = (eigvecs * roots) @ eigvecs.T
    return root
