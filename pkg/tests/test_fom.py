"""
Tests for the full-order flux-differencing model
"""

import numpy as np
import pytest

from esrom.config import FomConfig
from esrom.errors import PositivityError
from esrom.fom import (
    FullOrderModel,
    boundary_terms,
    conserved_integrals,
    dense_flux_differencing,
    entropy_balance,
    volume_term,
)
from esrom.operators import build_fom_operators
from esrom.physics import Burgers, Euler
from esrom.timestepping import LowStorageRK45, cfl_step, integrate


def smooth_euler_state(law, x, amp=0.3):
    rho = 2.0 + amp * np.sin(np.pi * x)
    u = 0.2 * np.cos(np.pi * x)
    return law.conservative(rho, u[:, None], rho ** law.gamma)


def test_volume_term_matches_dense_burgers():
    """Test the stencil flux differencing against the brute-force Hadamard form (k = 4)"""
    law = Burgers()
    ops = build_fom_operators(4, 0.5, dim=1, periodic=True)
    u = np.array([[0.3], [-1.0], [2.0], [0.5]])
    dense = dense_flux_differencing(u, ops.q_dense(0), law)
    assert np.allclose(volume_term(u, ops, law), dense, rtol=1e-14, atol=1e-14)
    # hand computation at point 0: f_S(u0, u1) - f_S(u0, u3)
    f = lambda a, b: (a * a + a * b + b * b) / 6.0  # noqa: E731
    assert dense[0, 0] == pytest.approx(f(0.3, -1.0) - f(0.3, 0.5))


@pytest.mark.parametrize("periodic", [False, True])
def test_volume_term_matches_dense_euler_1d(periodic):
    """Test 1D Euler flux differencing against the dense formula"""
    law = Euler(dim=1)
    ops = build_fom_operators(12, 2.0 / 12, dim=1, periodic=periodic)
    u = smooth_euler_state(law, ops.grid_points((-1.0, 1.0))[:, 0])
    dense = dense_flux_differencing(u, ops.q_dense(0), law)
    assert np.allclose(volume_term(u, ops, law), dense, rtol=1e-13, atol=1e-13)


@pytest.mark.parametrize("periodic", [False, True])
def test_volume_term_matches_dense_euler_2d(periodic):
    """Test 2D Euler flux differencing against the dense formula"""
    law = Euler(dim=2)
    k = 5
    ops = build_fom_operators(k, 2.0 / k, dim=2, periodic=periodic)
    x = ops.grid_points((-1.0, 1.0))
    rho = 1.5 + 0.2 * np.sin(np.pi * x[:, 0]) * np.cos(np.pi * x[:, 1])
    vel = np.stack([0.1 * np.cos(np.pi * x[:, 1]), -0.2 * np.sin(np.pi * x[:, 0])], axis=-1)
    u = law.conservative(rho, vel, rho ** law.gamma)
    dense = sum(dense_flux_differencing(u, ops.q_dense(a), law, a) for a in range(2))
    assert np.allclose(volume_term(u, ops, law), dense, rtol=1e-13, atol=1e-13)


def test_periodic_volume_term_conserves_entropy():
    """Test v^T 2 (Q o F) 1 = 0 for periodic grids"""
    law = Euler(dim=1)
    ops = build_fom_operators(200, 0.01, dim=1, periodic=True)
    u = smooth_euler_state(law, ops.grid_points((-1.0, 1.0))[:, 0])
    vol = volume_term(u, ops, law)
    v = law.entropy_variables(u)
    scale = np.sum(np.abs(v * vol))
    assert abs(np.sum(v * vol)) <= 1e-12 * scale
    assert np.allclose(vol.sum(axis=0), 0.0, atol=1e-12), "Flux differencing should be conservative"


def test_wall_terms_entropy():
    """Test that the mirror-state wall flux is entropy conservative and the penalty dissipative"""
    cfg = FomConfig(k_cells=50, boundary="wall", epsilon=1e-3)
    model = FullOrderModel(cfg)
    u = smooth_euler_state(model.law, model.grid()[:, 0])
    balance = entropy_balance(u, model.rhs_parts(u), model.law)
    assert abs(balance.convective) <= 1e-12 * balance.scale
    assert balance.boundary <= 0.0, "Lax-Friedrichs penalty should dissipate entropy"
    assert balance.viscous <= 0.0, "Artificial viscosity should dissipate entropy"


def test_boundary_terms_zero_when_periodic():
    """Test that periodic grids have no boundary contributions"""
    law = Euler(dim=1)
    ops = build_fom_operators(10, 0.2, dim=1, periodic=True)
    u = smooth_euler_state(law, ops.grid_points((-1.0, 1.0))[:, 0])
    ec, pen = boundary_terms(u, ops, law)
    assert not ec.any() and not pen.any()


def test_constant_state_is_steady():
    """Test du/dt = 0 for a uniform state"""
    cfg = FomConfig(k_cells=20, initial_condition="constant", epsilon=1e-2)
    model = FullOrderModel(cfg)
    u = model.initial_state()
    assert np.allclose(model.rhs(0.0, u), 0.0, atol=1e-12)


def test_integrate_records_snapshots():
    """Test snapshot recording stride and final time"""
    cfg = FomConfig(k_cells=40, final_time=0.05, snapshot_stride=2)
    snaps, records = FullOrderModel(cfg).integrate()
    assert snaps.times[0] == 0.0
    assert snaps.times[-1] == cfg.final_time
    assert snaps.states.shape[:2] == (40, 3)
    assert snaps.n_snapshots == len(snaps.times)
    assert snaps.steps >= snaps.n_snapshots - 1
    assert records == []
    assert snaps.fingerprint, "Snapshots should carry a fingerprint"


def test_integrate_diagnostics_conservation():
    """Test per-step entropy conservation and conserved integrals (periodic, eps = 0)"""
    cfg = FomConfig(k_cells=100, final_time=0.1)
    model = FullOrderModel(cfg)
    _, records = model.integrate(diagnostics=True)
    assert records, "Diagnostics should produce one record per step"
    for r in records:
        assert abs(r.balance.convective) <= 1e-12 * r.balance.scale
    conserved = np.array([r.conserved for r in records])
    assert np.allclose(conserved, conserved[0], rtol=1e-12, atol=1e-12)


def test_max_steps_stops_early():
    """Test the step cap"""
    cfg = FomConfig(k_cells=30, final_time=1.0, max_steps=3)
    snaps, _ = FullOrderModel(cfg).integrate()
    assert snaps.steps == 3
    assert snaps.times[-1] < 1.0


def test_positivity_error_is_annotated():
    """Test that a blow-up reports the step where it happened"""
    cfg = FomConfig(k_cells=20, final_time=1e4, fixed_dt=1e3)
    with pytest.raises(PositivityError) as info:
        FullOrderModel(cfg).integrate()
    assert info.value.step == 1
    assert info.value.time == 0.0


def test_conserved_integrals():
    """Test h * column sums"""
    u = np.ones((4, 3))
    assert np.allclose(conserved_integrals(u, 0.5), [2.0, 2.0, 2.0])


def test_lsrk_fourth_order():
    """Test temporal convergence on y' = y cos(t), y(0) = 1"""
    rhs = lambda t, y: y * np.cos(t)  # noqa: E731
    final = 2.0
    exact = np.exp(np.sin(final))

    def error(dt):
        _, states, _ = integrate(np.ones(1), rhs, final, lambda y: dt, fixed_dt=dt)
        return abs(states[-1][0] - exact)

    errors = np.array([error(dt) for dt in (0.1, 0.05, 0.025)])
    slopes = np.log2(errors[:-1] / errors[1:])
    assert np.all(np.abs(slopes - 4.0) <= 0.5), f"Expected fourth order, got slopes {slopes}"


def test_observer_called_after_first_stage():
    """Test that the observer sees the state at the start of each step"""
    seen = []
    rhs = lambda t, y: -y  # noqa: E731
    times, states, steps = integrate(
        np.ones(1), rhs, 0.3, lambda y: 0.1, observer=lambda s, t, dt, y: seen.append((s, t, y[0]))
    )
    assert steps == 3
    assert [s for s, _, _ in seen] == [0, 1, 2]
    assert seen[0][2] == 1.0
    assert seen[1][2] == pytest.approx(states[1][0])
    assert LowStorageRK45.order == 4


def test_zero_burgers_field_reaches_final_time():
    """Test that a motionless field takes one step to the end time instead of dividing by zero"""
    cfg = FomConfig(
        law="burgers", k_cells=20, final_time=0.1, initial_condition="constant", ic_params={"state": [0.0]}
    )
    model = FullOrderModel(cfg)
    assert model.stable_dt(model.initial_state()) == np.inf
    snaps, _ = model.integrate()
    assert snaps.steps == 1
    assert snaps.times[-1] == cfg.final_time
    assert np.all(snaps.states == 0.0)


def test_cfl_step():
    assert cfl_step(0.5, 0.1, 2.0) == pytest.approx(0.025)
    assert cfl_step(0.5, 0.1, 0.0) == np.inf


def test_nonpositive_step_is_rejected():
    with pytest.raises(ValueError, match="invalid time step"):
        integrate(np.ones(1), lambda t, y: -y, 1.0, lambda y: 0.0)
