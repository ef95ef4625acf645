"""
Tests for the conservation laws and two-point fluxes
"""

import numpy as np
import pytest

from esrom.errors import NumericsError, PositivityError
from esrom.physics import Burgers, Euler, log_mean, make_law


def random_euler_states(rng, n, dim):
    law = Euler(dim=dim)
    rho = rng.uniform(0.5, 2.0, n)
    vel = rng.uniform(-1.0, 1.0, (n, dim))
    p = rng.uniform(0.5, 2.0, n)
    return law, law.conservative(rho, vel, p)


def test_log_mean_limits():
    """Test the logarithmic mean on equal and distinct arguments"""
    assert log_mean(3.0, 3.0) == pytest.approx(3.0, rel=1e-15)
    assert log_mean(2.0, 1.0) == pytest.approx(1.0 / np.log(2.0), rel=1e-14)


def test_log_mean_near_equal():
    """Test the series branch against a high-precision value"""
    a, b = 1.0, 1.0 + 1e-9
    # (a - b)/(log a - log b) for nearly equal a, b: arithmetic mean minus (a-b)^2/(12 mean)
    mean = 0.5 * (a + b)
    ref = mean - (b - a) ** 2 / (12.0 * mean)
    assert log_mean(a, b) == pytest.approx(ref, rel=1e-13)


def test_log_mean_symmetric_vectorized(rng):
    """Test symmetry on arrays spanning both branches"""
    a = rng.uniform(0.1, 3.0, 1000)
    b = a * (1.0 + rng.choice([1e-8, 1e-3, 0.5], 1000))
    assert np.allclose(log_mean(a, b), log_mean(b, a), rtol=1e-14)


def test_log_mean_rejects_nonpositive():
    """Test that nonpositive arguments are refused"""
    with pytest.raises(NumericsError):
        log_mean(0.0, 1.0)


@pytest.mark.parametrize("dim", [1, 2])
def test_euler_flux_conditions(rng, dim):
    """Test consistency, symmetry and entropy conservation of the Euler EC flux"""
    law, u_l = random_euler_states(rng, 10000, dim)
    _, u_r = random_euler_states(rng, 10000, dim)
    v_l, v_r = law.entropy_variables(u_l), law.entropy_variables(u_r)
    for axis in range(dim):
        f_s = law.ec_flux_dir(u_l, u_r, axis)
        assert np.allclose(law.ec_flux_dir(u_l, u_l, axis), law.flux_dir(u_l, axis), rtol=1e-13, atol=1e-13), \
            "EC flux should be consistent"
        assert np.allclose(f_s, law.ec_flux_dir(u_r, u_l, axis), rtol=1e-13, atol=1e-13), \
            "EC flux should be symmetric"
        jump = np.sum((v_l - v_r) * f_s, axis=-1) - (law.potential_dir(u_l, axis) - law.potential_dir(u_r, axis))
        assert np.max(np.abs(jump)) <= 1e-11, "EC flux should conserve entropy"
    stacked = law.ec_flux(u_l, u_r)
    assert stacked.shape == (dim,) + u_l.shape
    assert np.array_equal(stacked[dim - 1], law.ec_flux_dir(u_l, u_r, dim - 1))


def test_burgers_flux_conditions(rng):
    """Test the Burgers EC flux conditions"""
    law = Burgers()
    u_l = rng.uniform(-2.0, 2.0, (10000, 1))
    u_r = rng.uniform(-2.0, 2.0, (10000, 1))
    f_s = law.ec_flux_dir(u_l, u_r)
    assert np.allclose(law.ec_flux_dir(u_l, u_l), law.flux_dir(u_l), rtol=1e-13, atol=1e-13)
    assert np.allclose(f_s, law.ec_flux_dir(u_r, u_l), rtol=1e-14, atol=1e-14)
    jump = ((u_l - u_r) * f_s)[:, 0] - (law.potential_dir(u_l) - law.potential_dir(u_r))
    assert np.max(np.abs(jump)) <= 1e-11


@pytest.mark.parametrize("dim", [1, 2])
def test_entropy_variable_round_trip(rng, dim):
    """Test u -> v -> u on random admissible states"""
    law, u = random_euler_states(rng, 1000, dim)
    back = law.conservative_from_entropy(law.entropy_variables(u))
    assert np.max(np.abs(back - u) / np.abs(u).max(axis=-1, keepdims=True)) <= 1e-12


def test_entropy_variables_are_entropy_gradient(rng):
    """Test v = dS/du against central differences"""
    law, u = random_euler_states(rng, 1, 1)
    u = u[0]
    step = 1e-6
    fd = np.zeros(3)
    for k in range(3):
        e = np.zeros(3)
        e[k] = step
        fd[k] = (law.entropy(u + e) - law.entropy(u - e)) / (2.0 * step)
    assert np.allclose(law.entropy_variables(u), fd, rtol=1e-5, atol=1e-8)


@pytest.mark.parametrize("dim", [1, 2])
def test_jacobian_dudv(rng, dim):
    """Test du/dv against central differences of u(v) and check symmetry"""
    law, u = random_euler_states(rng, 1, dim)
    u = u[0]
    v = law.entropy_variables(u)
    n = law.n_components
    step = 1e-6
    fd = np.zeros((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = step
        fd[:, k] = (law.conservative_from_entropy(v + e) - law.conservative_from_entropy(v - e)) / (2.0 * step)
    jac = law.jacobian_dudv(u)
    assert np.allclose(jac, jac.T, rtol=1e-13, atol=1e-13), "du/dv should be symmetric"
    assert np.allclose(jac, fd, rtol=1e-5, atol=1e-6), "du/dv should match finite differences"
    assert np.all(np.linalg.eigvalsh(jac) > 0.0), "du/dv should be positive definite"


def test_euler_positivity_error():
    """Test that a negative pressure is reported with its point index"""
    law = Euler(dim=1)
    u = law.conservative(np.ones(5), np.zeros((5, 1)), np.ones(5))
    u[3, 2] = -1.0
    with pytest.raises(PositivityError) as info:
        law.flux_dir(u, 0)
    assert info.value.index == 3
    assert info.value.quantity == "pressure"


def test_euler_entropy_admissibility():
    """Test that v_last >= 0 is rejected by the inverse map"""
    law = Euler(dim=1)
    with pytest.raises(PositivityError):
        law.conservative_from_entropy(np.array([[1.0, 0.0, 0.5]]))


def test_mirror_state():
    """Test the wall mirror state reflects only the normal momentum"""
    law = Euler(dim=2)
    u = law.conservative(np.array([1.2]), np.array([[0.3, -0.4]]), np.array([1.0]))
    mirrored = law.mirror_state(u, np.array([1.0, 0.0]))
    assert mirrored[0, 0] == u[0, 0]
    assert mirrored[0, 1] == -u[0, 1]
    assert mirrored[0, 2] == u[0, 2]
    assert mirrored[0, 3] == u[0, 3]


@pytest.mark.parametrize("penalty", [False, True])
def test_wall_flux_has_no_mass_flux(rng, penalty):
    """Test that the wall flux carries no mass through the wall"""
    law, u = random_euler_states(rng, 50, 2)
    for axis in range(2):
        for sign in (-1.0, 1.0):
            normal = np.zeros(2)
            normal[axis] = sign
            f = law.boundary_flux_dir(u, normal, axis, penalty=penalty)
            assert np.max(np.abs(f[:, 0])) <= 1e-14


def test_wall_flux_entropy_conservative(rng):
    """Test v^T f* = psi . n for the mirror-state flux"""
    law, u = random_euler_states(rng, 50, 1)
    v = law.entropy_variables(u)
    for sign in (-1.0, 1.0):
        normal = np.array([sign])
        f = law.boundary_flux_dir(u, normal, 0, penalty=False)
        assert np.allclose(np.sum(v * f, axis=-1), law.potential_dir(u, 0), rtol=1e-12, atol=1e-12)


def test_max_wavespeed():
    """Test |u| + c for a uniform state"""
    law = Euler(dim=1, gamma=1.4)
    u = law.conservative(np.array([1.0]), np.array([[0.5]]), np.array([1.0]))
    assert law.max_wavespeed(u) == pytest.approx(0.5 + np.sqrt(1.4))


def test_make_law():
    """Test law construction by name"""
    assert isinstance(make_law("burgers"), Burgers)
    assert make_law("euler", dim=2).n_components == 4
    with pytest.raises(ValueError):
        make_law("burgers", dim=2)
    with pytest.raises(ValueError):
        make_law("maxwell")
