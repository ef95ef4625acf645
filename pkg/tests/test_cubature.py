"""
Tests for empirical cubature and the stabilizing, viscous and boundary rules
"""

import numpy as np
import pytest

from esrom import cubature
from esrom.cubature import (
    boundary_constraint_residual,
    boundary_weights,
    empirical_cubature,
    energy_residuals,
    hadamard_products,
    mass_matrix_error,
    stabilizing_points,
    target_space,
    viscous_points,
)
from esrom.errors import CubatureError
from esrom.models import CubatureRule
from esrom.operators import build_fom_operators, diffusion_matrices

N_GRID = 64
H = 2.0 / N_GRID


def fourier_basis(n_points=N_GRID, n_waves=2):
    x = -1.0 + (np.arange(n_points) + 0.5) * 2.0 / n_points
    cols = [np.ones(n_points)]
    for m in range(1, n_waves + 1):
        cols += [np.cos(m * np.pi * x), np.sin(m * np.pi * x)]
    q, _ = np.linalg.qr(np.stack(cols, axis=1))
    return q


def polynomial_basis_2d(k):
    ops = build_fom_operators(k, 2.0 / k, dim=2, periodic=False)
    x = ops.grid_points((-1.0, 1.0))
    xs, ys = x[:, 0], x[:, 1]
    q, _ = np.linalg.qr(np.stack([np.ones_like(xs), xs, ys, xs * ys, xs ** 2], axis=1))
    return ops, q


def test_hadamard_products():
    """Test that all products with i <= j are formed"""
    v = np.arange(12.0).reshape(4, 3)
    prods = hadamard_products(v)
    assert prods.shape == (4, 6)
    assert np.array_equal(prods[:, 1], v[:, 0] * v[:, 1])


def test_energy_residuals():
    """Test the residual energy fraction at both ends"""
    e = energy_residuals(np.array([3.0, 4.0]))
    assert e[0] == pytest.approx(1.0)
    assert e[1] == pytest.approx(0.8)
    assert e[-1] == 0.0


def test_empirical_cubature_fourier():
    """Test that the greedy rule integrates trigonometric mass matrices"""
    v = fourier_basis()
    target = target_space(v, 1e-10)
    rule = empirical_cubature(target, np.full(N_GRID, H), 1e-10)
    assert 0 < len(rule) < N_GRID
    assert np.all(rule.weights > 0.0), "Cubature weights should be positive"
    assert rule.residual <= 1e-10
    assert rule.history[0] == 1.0 and rule.history[-1] == rule.residual
    assert mass_matrix_error(v, rule, H) <= 1e-6


def test_empirical_cubature_exhaustion(rng):
    """Test that an unreachable target raises CubatureError"""
    v_target = rng.standard_normal((5, 10))
    w = np.array([1.0, -1.0, 1.0, -1.0, 1.0])
    with pytest.raises(CubatureError) as info:
        empirical_cubature(v_target, w, 1e-12)
    assert info.value.residual > 1e-12


def test_empirical_cubature_zero_target():
    """Test that a vanishing target gives an empty rule"""
    rule = empirical_cubature(np.zeros((4, 2)), np.ones(4), 1e-8)
    assert len(rule) == 0


def test_stabilizing_keeps_well_conditioned_rule():
    """Test that a well-conditioned rule keeps its points and gets its condition number recorded"""
    v = fourier_basis()
    target = target_space(v, 1e-10)
    w_full = np.full(N_GRID, H)
    rule = empirical_cubature(target, w_full, 1e-10)
    out = stabilizing_points(v, rule, target, w_full)
    assert out is not rule
    assert np.array_equal(out.indices, rule.indices)
    assert np.array_equal(out.weights, rule.weights)
    assert out.kind == rule.kind
    assert out.condition[0] == pytest.approx(1.0, rel=1e-4)
    assert rule.condition == {}, "The input rule should not be modified"


def test_stabilizing_augments_singular_rule():
    """Test that a two-point rule is augmented to a nonsingular merged rule"""
    v = fourier_basis()
    target = target_space(v, 1e-10)
    w_full = np.full(N_GRID, H)
    rule = CubatureRule(np.array([0, 1]), np.array([H, H]))
    assert np.linalg.eigvalsh(cubature.test_mass_matrix(v, rule)).min() <= 1e-12

    out = stabilizing_points(v, rule, target, w_full, tol=1e-10)
    assert out.kind == "stabilizing-merged"
    assert len(out) > 2
    assert np.all(out.weights > 0.0)
    assert np.linalg.eigvalsh(cubature.test_mass_matrix(v, out)).min() > 0.0


def test_stabilizing_single_null_direction():
    """Test that a rule one point short of the test basis dimension is repaired"""
    v = fourier_basis()
    target = target_space(v, 1e-10)
    w_full = np.full(N_GRID, H)
    rule = CubatureRule(np.array([3, 17, 30, 50]), np.full(4, H))
    lam = np.linalg.eigvalsh(cubature.test_mass_matrix(v, rule))
    assert lam[0] <= 1e-12 * lam[-1]

    out = stabilizing_points(v, rule, target, w_full, tol=1e-10)
    assert out.kind == "stabilizing-merged"
    assert 1.0 <= out.condition[0] <= 1e6
    assert np.linalg.eigvalsh(cubature.test_mass_matrix(v, out)).min() > 0.0
    added = set(out.indices.tolist()) - {3, 17, 30, 50}
    assert out.n_stabilizing == len(added) >= 1
    assert np.array_equal(rule.indices, [3, 17, 30, 50]) and rule.condition == {}


def test_stabilizing_count_ignores_dropped_points():
    """Test that the stabilizing count never goes negative when original points lose their weight"""
    v = fourier_basis()
    target = target_space(v, 1e-10)
    w_full = np.full(N_GRID, H)
    rule = CubatureRule(np.array([0, 2, 4]), np.full(3, H))

    out = stabilizing_points(v, rule, target, w_full, tol=1e-10)
    assert out.n_stabilizing >= 0
    assert out.n_stabilizing == len(set(out.indices.tolist()) - {0, 2, 4})


def test_empirical_cubature_skips_vanishing_rows():
    """Test that a single-column target is integrated at its largest entry, never at a zero"""
    z = np.array([1e-17, 0.5, 2.0, 1.0])
    rule = empirical_cubature((z ** 2)[:, None], np.ones(4), 1e-12)
    assert rule.indices.tolist() == [2]
    assert rule.weights[0] == pytest.approx(np.sum(z ** 2) / 4.0)
    assert rule.residual <= 1e-12


def test_empirical_cubature_history_nonincreasing():
    """Test that the greedy residual never grows from one point to the next"""
    v = fourier_basis(n_waves=4)
    target = target_space(v, 1e-12)
    rule = empirical_cubature(target, np.full(N_GRID, H), 1e-10)
    history = np.asarray(rule.history)
    assert history[0] == 1.0
    assert np.all(np.diff(history) <= 1e-12), f"Residual history grew: {history}"


def test_viscous_points():
    """Test that the interface rule reproduces (DV)^T (DV)"""
    _, d = diffusion_matrices(N_GRID, H, periodic=True)
    v = fourier_basis()
    rule = viscous_points(d, v, 1e-10)
    assert rule.kind == "viscous"
    assert np.all(rule.indices < d.shape[0])
    dv = d @ v
    full = dv.T @ dv
    approx = dv[rule.indices].T @ (rule.weights[:, None] * dv[rule.indices])
    assert np.linalg.norm(full - approx) <= 1e-6 * np.linalg.norm(full)


def test_viscous_points_constant_basis():
    """Test that a constant basis needs no viscous points"""
    _, d = diffusion_matrices(10, 0.2, periodic=True)
    rule = viscous_points(d, np.full((10, 1), 1.0 / np.sqrt(10)), 1e-8)
    assert len(rule) == 0


def test_boundary_weights_1d():
    """Test that 1D keeps both wall points with unit weight"""
    ops = build_fom_operators(10, 0.2, dim=1, periodic=False)
    v = fourier_basis(10, 1)
    rule = boundary_weights(ops.boundary, [v], ops, v, 1e-8)
    assert np.array_equal(rule.indices, [0, 1])
    assert np.array_equal(rule.weights, [1.0, 1.0])
    assert np.max(np.abs(boundary_constraint_residual(rule, ops.boundary, [v], ops))) <= 1e-13


def test_full_boundary_rule_satisfies_constraints():
    """Test that every boundary entry with its own weight satisfies the constraints"""
    ops, v = polynomial_basis_2d(6)
    nodes = ops.boundary
    full = CubatureRule(np.arange(len(nodes)), nodes.weight.copy(), kind="boundary")
    assert np.max(np.abs(boundary_constraint_residual(full, nodes, [v, v], ops))) <= 1e-13


def test_boundary_weights_2d():
    """Test the reduced 2D boundary rule meets the constraint tolerance"""
    ops, v = polynomial_basis_2d(8)
    nodes = ops.boundary
    rule = boundary_weights(nodes, [v, v], ops, v, 1e-8, constraint_tol=5e-8)
    assert rule.kind == "boundary"
    assert np.all(rule.weights > 0.0)
    assert rule.residual <= 5e-8
    assert np.max(np.abs(boundary_constraint_residual(rule, nodes, [v, v], ops))) <= 5e-8
