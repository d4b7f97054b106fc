"""
Dense Linear Algebra Kernel
===========================
Row-major float64 matrices and vectors backed by numpy, plus the
symmetric positive-definite solve used for the normal equations.

  matmul     → checked matrix product
  transpose  → matrix transpose
  solve_spd  → (A + ridge·I) x = b by Cholesky factorization
"""

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from app.config import settings
from app.errors import DimensionMismatch, NotPositiveDefinite

Matrix = NDArray[np.float64]
Vector = NDArray[np.float64]


def as_matrix(values: ArrayLike) -> Matrix:
    """Coerce to a 2-D float64 array with at least one row and column."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got {arr.ndim} dimension(s)")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionMismatch(f"matrix must be at least 1x1, got {arr.shape[0]}x{arr.shape[1]}")
    return arr


def as_vector(values: ArrayLike) -> Vector:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch(f"expected a 1-D vector, got {arr.ndim} dimension(s)")
    if arr.size < 1:
        raise DimensionMismatch("vector must have at least one entry")
    return arr


def matmul(a: ArrayLike, b: ArrayLike) -> Matrix:
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatch(
            f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}"
        )
    return a @ b


def transpose(a: ArrayLike) -> Matrix:
    return np.ascontiguousarray(as_matrix(a).T)


def solve_spd(a: ArrayLike, b: ArrayLike, ridge: float = 0.0) -> Vector:
    """
    Solve (a + ridge·I) x = b for symmetric positive-definite `a`.

    Raises NotPositiveDefinite when any Cholesky pivot is at or below
    settings.PIVOT_FLOOR; callers treat that as "grow the ridge and retry".
    """
    a = as_matrix(a)
    b = as_vector(b)
    n = a.shape[0]
    if a.shape[1] != n:
        raise DimensionMismatch(f"matrix must be square, got {a.shape[0]}x{a.shape[1]}")
    if b.size != n:
        raise DimensionMismatch(f"right-hand side has {b.size} entries, matrix has {n} rows")
    if ridge < 0:
        raise ValueError(f"ridge must be nonnegative, got {ridge}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise NotPositiveDefinite("system contains non-finite entries")

    asym = np.max(np.abs(a - a.T))
    if asym > settings.SYMMETRY_TOL * (1.0 + np.max(np.abs(a))):
        raise DimensionMismatch(f"matrix is not symmetric (max asymmetry {asym:.3e})")

    damped = a + ridge * np.eye(n)

    try:
        factor, lower = scipy.linalg.cho_factor(damped, lower=True, check_finite=False)
    except np.linalg.LinAlgError as e:
        raise NotPositiveDefinite(f"Cholesky factorization failed: {e}") from e

    # pivot = L[i, i]^2, the value whose square root the factorization took
    pivots = np.diag(factor) ** 2
    worst = int(np.argmin(pivots))
    if pivots[worst] <= settings.PIVOT_FLOOR:
        raise NotPositiveDefinite(
            f"pivot {worst} is {pivots[worst]:.3e} (floor {settings.PIVOT_FLOOR:.0e})",
            pivot_index=worst,
            pivot=float(pivots[worst]),
        )

    return scipy.linalg.cho_solve((factor, lower), b, check_finite=False)
