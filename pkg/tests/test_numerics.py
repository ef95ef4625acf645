"""
Tests for the dense linear-algebra routines
"""

import numpy as np
import pytest
import scipy.optimize

from esrom.errors import NotPositiveDefiniteError, NumericsError
from esrom.numerics import condition_number_spd, lstsq, nnls, solve_spd, thin_svd


def test_thin_svd_reconstructs(rng):
    """Test that U diag(s) V^T reproduces the input"""
    a = rng.standard_normal((20, 5))
    svd = thin_svd(a)
    recon = svd.left_vectors @ np.diag(svd.singular_values) @ svd.right_vectors.T
    assert np.max(np.abs(a - recon)) <= 1e-12 * np.linalg.norm(a), "SVD should reconstruct A"
    assert np.all(np.diff(svd.singular_values) <= 0.0), "Singular values should be nonincreasing"
    assert svd.rank_bound == 5


def test_thin_svd_numerical_rank(rng):
    """Test rank detection on a rank-2 matrix"""
    a = rng.standard_normal((10, 2)) @ rng.standard_normal((2, 6))
    assert thin_svd(a).numerical_rank() == 2


def test_thin_svd_rejects_nan():
    """Test that non-finite input is refused"""
    a = np.ones((3, 3))
    a[1, 1] = np.nan
    with pytest.raises(NumericsError):
        thin_svd(a)


def test_lstsq_consistent_system(rng):
    """Test least squares on an overdetermined consistent system"""
    a = rng.standard_normal((12, 4))
    x = rng.standard_normal(4)
    assert np.allclose(lstsq(a, a @ x), x, atol=1e-12)


def test_nnls_matches_scipy(rng):
    """Test Lawson-Hanson against scipy's reference implementation"""
    a = rng.standard_normal((20, 8))
    b = rng.standard_normal(20)
    x = nnls(a, b)
    ref, _ = scipy.optimize.nnls(a, b)
    assert np.all(x >= 0.0), "NNLS solution should be nonnegative"
    assert np.allclose(x, ref, atol=1e-8), "NNLS should match scipy"


def test_nnls_recovers_positive_solution(rng):
    """Test that a consistent system with a positive solution is solved exactly"""
    a = rng.random((15, 6))
    x_true = rng.random(6) + 0.1
    x = nnls(a, a @ x_true)
    assert np.allclose(x, x_true, atol=1e-10)


def test_nnls_empty_problem():
    """Test NNLS with no unknowns"""
    assert nnls(np.zeros((3, 0)), np.ones(3)).shape == (0,)


def test_solve_spd(rng):
    """Test SPD solve against the pseudo-inverse"""
    v = rng.standard_normal((10, 4))
    a = v.T @ v
    b = rng.standard_normal((4, 3))
    x = solve_spd(a, b)
    assert np.allclose(x, np.linalg.pinv(a) @ b, rtol=1e-10, atol=1e-12)


def test_solve_spd_singular():
    """Test that a singular matrix raises NotPositiveDefiniteError with the pivot"""
    v = np.array([1.0, 2.0, 3.0])
    with pytest.raises(NotPositiveDefiniteError) as info:
        solve_spd(np.outer(v, v), np.ones(3), context="toy")
    assert info.value.pivot == 1
    assert "toy" in str(info.value)


def test_solve_spd_rejects_nonsymmetric():
    """Test that a nonsymmetric matrix is refused"""
    a = np.array([[2.0, 1.0], [0.0, 2.0]])
    with pytest.raises(NumericsError):
        solve_spd(a, np.ones(2))


def test_condition_number_spd():
    """Test the spectral condition number"""
    assert condition_number_spd(np.diag([1.0, 100.0])) == pytest.approx(100.0)
    assert condition_number_spd(np.diag([0.0, 1.0])) == float("inf")
