"""Gaussian correlation kernel and dense SPD linear algebra.

Correlation matrices here always have unit diagonal before the nugget is
added.  Everything downstream works with the lower Cholesky factor: the
log-determinant comes from its diagonal and solves are forward/backward
substitutions, never an explicit inverse.
"""

import warnings

import numpy as np
from scipy.linalg import cho_solve

from .errors import IllConditionedError, NotPositiveDefiniteError

DEFAULT_NUGGET = 1e-8
MAX_NUGGET = 1e-4

# Cholesky pivot (squared diagonal entry) at or below this is treated as
# a positive-definiteness failure.
PIVOT_TOL = 1e-12


def gaussian_corr(xi, xj, theta) -> float:
    """Correlation exp(-sum_k theta_k |xi_k - xj_k|^2) between two points."""
    xi = np.asarray(xi, dtype=float)
    xj = np.asarray(xj, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if not (xi.shape == xj.shape == theta.shape) or xi.ndim != 1 or xi.size < 1:
        raise ValueError(
            f"dimension mismatch: xi {xi.shape}, xj {xj.shape}, theta {theta.shape}"
        )
    if not (np.isfinite(xi).all() and np.isfinite(xj).all() and np.isfinite(theta).all()):
        raise ValueError("non-finite input")
    if np.any(theta < 0):
        raise ValueError("theta entries must be non-negative")
    return float(np.exp(-np.sum(theta * (xi - xj) ** 2)))


def pairwise_sqdiffs(points) -> np.ndarray:
    """Per-dimension squared differences, shape (n, n, d).

    Precompute once per design; the correlation matrix for any theta is then
    a single contraction away (see corr_matrix_from_sqdiffs).
    """
    x = np.asarray(points, dtype=float)
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        raise ValueError(f"points must be a non-empty (n, d) array, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError("non-finite design point")
    diff = x[:, None, :] - x[None, :, :]
    return diff * diff


def corr_matrix_from_sqdiffs(sqdiffs, theta, nugget: float = DEFAULT_NUGGET) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    n, _, d = sqdiffs.shape
    if theta.shape != (d,):
        raise ValueError(f"theta has shape {theta.shape}, expected ({d},)")
    if np.any(theta < 0):
        raise ValueError("theta entries must be non-negative")
    if nugget < 0:
        raise ValueError("nugget must be non-negative")
    r = np.exp(-(sqdiffs.reshape(n * n, d) @ theta)).reshape(n, n)
    r[np.diag_indices_from(r)] += nugget
    return r


def build_corr_matrix(points, theta, nugget: float = DEFAULT_NUGGET) -> np.ndarray:
    """n x n Gaussian correlation matrix with `nugget` added to the diagonal.

    Duplicate design points combined with a zero nugget make the matrix
    singular; that situation is flagged with a warning, not an error.
    """
    sqd = pairwise_sqdiffs(points)
    x = np.asarray(points, dtype=float)
    if nugget == 0 and len(np.unique(x, axis=0)) < len(x):
        warnings.warn(
            "duplicate design points with zero nugget: correlation matrix is singular",
            RuntimeWarning,
            stacklevel=2,
        )
    return corr_matrix_from_sqdiffs(sqd, theta, nugget)


def chol_decompose(m) -> np.ndarray:
    """Lower Cholesky factor of a symmetric positive-definite matrix.

    Raises NotPositiveDefiniteError when the factorization breaks down or any
    pivot falls at or below PIVOT_TOL, signalling the caller to retry with a
    larger nugget.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.allclose(m, m.T, rtol=1e-10, atol=1e-12):
        raise ValueError("matrix is not symmetric")
    try:
        lower = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(str(exc)) from None
    if np.any(lower.diagonal() ** 2 <= PIVOT_TOL):
        raise NotPositiveDefiniteError(f"pivot at or below tolerance {PIVOT_TOL}")
    return lower


def log_det_from_chol(lower) -> float:
    """log det M for M = lower @ lower.T, via 2 * sum(log diag(lower))."""
    diag = np.asarray(lower).diagonal()
    if np.any(diag <= 0):
        raise ValueError("invalid Cholesky factor: non-positive diagonal")
    return float(2.0 * np.sum(np.log(diag)))


def solve_with_chol(lower, b) -> np.ndarray:
    """Solve M v = b for M = lower @ lower.T."""
    lower = np.asarray(lower, dtype=float)
    b = np.asarray(b, dtype=float)
    if b.shape[0] != lower.shape[0]:
        raise ValueError(f"dimension mismatch: factor is {lower.shape[0]}, b has {b.shape[0]} rows")
    return cho_solve((lower, True), b)


def corr_cholesky(points, theta, nugget: float = DEFAULT_NUGGET, sqdiffs=None):
    """Correlation matrix Cholesky with automatic nugget escalation.

    Tries `nugget` first and multiplies by 10 after each positive-definiteness
    failure, up to MAX_NUGGET.  Returns (lower, nugget_used); raises
    IllConditionedError when even the maximum nugget fails.
    """
    if sqdiffs is None:
        sqdiffs = pairwise_sqdiffs(points)
    attempt = nugget
    while True:
        try:
            lower = chol_decompose(corr_matrix_from_sqdiffs(sqdiffs, theta, attempt))
            return lower, attempt
        except NotPositiveDefiniteError:
            if attempt >= MAX_NUGGET:
                raise IllConditionedError(
                    f"correlation matrix not positive definite at nugget {attempt:g}"
                ) from None
            attempt = min(max(attempt * 10.0, DEFAULT_NUGGET), MAX_NUGGET)
