"""
Dense linear-algebra substrate.

Thin SVD, least squares, non-negative least squares and SPD solves. All
routines are pure functions of their inputs and reject non-finite data.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from .errors import ConvergenceError, NotPositiveDefiniteError, NumericsError

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD A = U diag(s) Vt

    Attributes:
        left_vectors: U, orthonormal columns (rows x r)
        singular_values: s, nonincreasing, nonnegative (r,)
        right_vectors: V, orthonormal columns (cols x r); note: not transposed
    """
    left_vectors: np.ndarray
    singular_values: np.ndarray
    right_vectors: np.ndarray

    @property
    def rank_bound(self) -> int:
        return self.singular_values.shape[0]

    def numerical_rank(self, rtol: float = 1e-10) -> int:
        """Number of singular values above rtol * s_max"""
        s = self.singular_values
        if s.size == 0 or s[0] == 0.0:
            return 0
        return int(np.count_nonzero(s > rtol * s[0]))


def check_finite(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a float64 array, raising NumericsError on NaN/inf"""
    arr = np.asarray(a, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise NumericsError(f"{name} contains non-finite entries")
    return arr


def thin_svd(a: np.ndarray) -> SvdResult:
    """Thin singular value decomposition.

    Args:
        a: Finite rows x cols matrix

    Returns:
        SvdResult with min(rows, cols) singular triplets
    """
    a = check_finite(a)
    if a.ndim != 2:
        raise NumericsError(f"thin_svd expects a 2D matrix, got shape {a.shape}")
    if a.size == 0:
        k = min(a.shape)
        return SvdResult(
            np.zeros((a.shape[0], k)), np.zeros(k), np.zeros((a.shape[1], k))
        )
    try:
        u, s, vt = scipy.linalg.svd(a, full_matrices=False, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        logger.debug("gesdd did not converge, retrying with gesvd")
        u, s, vt = scipy.linalg.svd(a, full_matrices=False, lapack_driver="gesvd")
    return SvdResult(u, s, vt.T)


def lstsq(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Minimum-norm least-squares solution of a x = b"""
    a = check_finite(a)
    b = check_finite(b, "right-hand side")
    x, _, _, _ = scipy.linalg.lstsq(a, b, lapack_driver="gelsd")
    return x


def nnls(a: np.ndarray, b: np.ndarray, max_iter: int = None) -> np.ndarray:
    """Non-negative least squares, Lawson-Hanson active set.

    Solves min_{x >= 0} ||a x - b||_2. The outer loop is capped at
    ``10 * cols`` iterations.

    Args:
        a: m x n matrix
        b: m vector

    Returns:
        Componentwise nonnegative solution x (n,)

    Raises:
        ConvergenceError: if the iteration cap is reached (carries the best iterate)
    """
    a = check_finite(a)
    b = check_finite(b, "right-hand side")
    m, n = a.shape
    max_iter = max_iter or 10 * max(n, 1)

    x = np.zeros(n)
    if n == 0:
        return x
    tol = 10.0 * max(m, n) * np.finfo(float).eps * np.abs(a).sum(axis=0).max() * max(
        np.linalg.norm(b), 1.0
    )

    # passive[i] is True when x_i is free (the P set); False means held at zero
    passive = np.zeros(n, dtype=bool)
    # indices that re-entered and were immediately dropped without progress
    blocked = np.zeros(n, dtype=bool)
    idx = np.arange(n)
    best, best_res = x.copy(), np.linalg.norm(b)

    for _ in range(max_iter):
        w = a.T @ (b - a @ x)
        candidates = ~passive & ~blocked
        if not candidates.any() or np.max(w[candidates]) <= tol:
            return x

        j = idx[candidates][np.argmax(w[candidates])]
        passive[j] = True
        x_prev = x

        while True:
            z = np.zeros(n)
            z[passive] = lstsq(a[:, passive], b)
            if np.all(z[passive] > 0.0):
                x = z
                break

            # step toward z until the first passive coordinate hits zero
            m_bad = passive & (z <= 0.0)
            denom = x[m_bad] - z[m_bad]
            ratios = np.divide(
                x[m_bad], denom, out=np.zeros_like(denom), where=denom > 0.0
            )
            alpha = np.min(ratios)
            x = x + alpha * (z - x)
            passive &= x > 0.0
            x[~passive] = 0.0
            if not passive.any():
                break

        if not passive[j] and np.array_equal(x, x_prev):
            blocked[j] = True
        else:
            blocked[:] = False

        res = np.linalg.norm(a @ x - b)
        if res < best_res:
            best, best_res = x.copy(), res

    raise ConvergenceError(
        f"NNLS did not converge in {max_iter} iterations", best, best_res
    )


def solve_spd(a: np.ndarray, b: np.ndarray, context: str = "") -> np.ndarray:
    """Solve a x = b for symmetric positive-definite a via Cholesky.

    Args:
        a: Symmetric (to 1e-12 relative) positive-definite n x n matrix
        b: Right-hand side, n or n x k
        context: Prefix for the error message (e.g. which test mass matrix)

    Raises:
        NumericsError: if a is not symmetric or not finite
        NotPositiveDefiniteError: on a nonpositive (or numerically zero) pivot
    """
    a = check_finite(a)
    b = check_finite(b, "right-hand side")
    n = a.shape[0]
    if a.shape != (n, n):
        raise NumericsError(f"solve_spd expects a square matrix, got {a.shape}")
    scale = np.abs(a).max() if a.size else 0.0
    if np.abs(a - a.T).max(initial=0.0) > SYMMETRY_TOL * max(scale, 1e-300):
        raise NumericsError("solve_spd: matrix is not symmetric")

    c, info = lapack.dpotrf(a, lower=False, clean=True)
    if info > 0:
        raise NotPositiveDefiniteError(info - 1, context)
    if info < 0:
        raise NumericsError(f"dpotrf: illegal argument {-info}")

    # a zero eigenvalue may survive the factorization as a round-off pivot
    pivots = np.diag(c) ** 2
    floor = n * np.finfo(float).eps * np.max(np.diag(a))
    small = np.flatnonzero(pivots <= floor)
    if small.size:
        raise NotPositiveDefiniteError(small[0], context)

    x, info = lapack.dpotrs(c, b, lower=False)
    if info != 0:
        raise NumericsError(f"dpotrs: illegal argument {-info}")
    return x


def condition_number_spd(a: np.ndarray) -> float:
    """2-norm condition number of a symmetric PSD matrix via its spectrum"""
    lam = scipy.linalg.eigvalsh(check_finite(a))
    if lam[0] <= 0.0:
        return float("inf")
    return float(lam[-1] / lam[0])
