"""
Full-order entropy-conservative/stable finite volume model.

Semi-discretization (per grid point mass h = dx^dim):

    h du/dt + sum_i 2 (Q^i o F^i) 1 + sum_i B^i (f_i* - f_i(u)) + eps h K u = 0

Only adjacent flux pairs are nonzero in Q^i, so the flux differencing is
evaluated line by line; ``dense_flux_differencing`` is the brute-force form.
"""

import dataclasses
import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .config import FomConfig, fingerprint_of
from .models import EntropyBalance, SnapshotSet, StepRecord
from .operators import FomOperators, build_fom_operators
from .physics import ConservationLaw, make_law
from .presets import evaluate_initial_condition
from .timestepping import cfl_step, integrate

logger = logging.getLogger(__name__)


@dataclass
class FomRhsParts:
    """Terms of the bracket h du/dt = -(volume + boundary_ec + boundary_penalty + viscous)"""
    volume: np.ndarray
    boundary_ec: np.ndarray
    boundary_penalty: np.ndarray
    viscous: np.ndarray

    def total(self) -> np.ndarray:
        return self.volume + self.boundary_ec + self.boundary_penalty + self.viscous


def dense_flux_differencing(u: np.ndarray, q: np.ndarray, law: ConservationLaw, axis: int = 0) -> np.ndarray:
    """2 (Q o F) 1 with F_ij = f_S(u_i, u_j), evaluated over all pairs"""
    f = law.ec_flux_dir(u[:, None, :], u[None, :, :], axis)
    return 2.0 * np.einsum("ij,ijc->ic", q, f)


def volume_term(u: np.ndarray, ops: FomOperators, law: ConservationLaw) -> np.ndarray:
    """sum_i 2 (Q^i o F^i) 1 using the two-point stencil of Q"""
    k, n = ops.k, u.shape[-1]
    grid = u.reshape((k,) * ops.dim + (n,))
    out = np.zeros_like(grid)
    for axis in range(ops.dim):
        line = np.moveaxis(grid, axis, 0)
        f_int = law.ec_flux_dir(line[:-1], line[1:], axis)
        diff = np.zeros_like(line)
        diff[:-1] += f_int
        diff[1:] -= f_int
        if ops.periodic:
            f_wrap = law.ec_flux_dir(line[-1], line[0], axis)
            diff[-1] += f_wrap
            diff[0] -= f_wrap
        else:
            diff[0] -= law.flux_dir(line[0], axis)
            diff[-1] += law.flux_dir(line[-1], axis)
        out += np.moveaxis(diff, 0, axis)
    return ops.face_measure * out.reshape(u.shape)


def boundary_terms(u: np.ndarray, ops: FomOperators, law: ConservationLaw, penalty: bool = True):
    """Wall terms sum_i B^i (f_i* - f_i(u)), split into the entropy-conservative
    mirror-flux part and the Lax-Friedrichs penalty part"""
    ec = np.zeros_like(u)
    pen = np.zeros_like(u)
    nodes = ops.boundary
    if nodes is None:
        return ec, pen
    for axis in range(ops.dim):
        bd = nodes.b_diag(axis)
        active = bd != 0.0
        idx = nodes.index[active]
        normal = nodes.normal[active]
        ub = u[idx]
        w = bd[active, None]
        f_star = law.boundary_flux_dir(ub, normal, axis, penalty=False)
        np.add.at(ec, idx, w * (f_star - law.flux_dir(ub, axis)))
        if penalty:
            u_plus = law.mirror_state(ub, normal)
            lf = normal[:, axis, None] * law.lax_friedrichs_penalty(ub, u_plus, normal)
            np.add.at(pen, idx, w * lf)
    return ec, pen


def fom_rhs_parts(u, ops: FomOperators, law: ConservationLaw, cfg: FomConfig, penalty: bool = True) -> FomRhsParts:
    law.check_admissible(u)
    ec, pen = boundary_terms(u, ops, law, penalty=penalty)
    if cfg.epsilon > 0.0:
        visc = cfg.epsilon * ops.cell_measure * ops.apply_k(u)
    else:
        visc = np.zeros_like(u)
    return FomRhsParts(volume_term(u, ops, law), ec, pen, visc)


def fom_rhs(u, ops: FomOperators, law: ConservationLaw, cfg: FomConfig, penalty: bool = True) -> np.ndarray:
    """du/dt for a (n_points, n_components) state field"""
    return -fom_rhs_parts(u, ops, law, cfg, penalty).total() / ops.cell_measure


def total_entropy(u: np.ndarray, weights, law: ConservationLaw) -> float:
    """sum_i w_i S(u_i)"""
    return float(np.sum(np.asarray(weights) * law.entropy(u)))


def entropy_balance(u: np.ndarray, parts: FomRhsParts, law: ConservationLaw) -> EntropyBalance:
    """Split d/dt sum_i h S(u_i) = -sum_i v_i^T (bracket terms)_i into its sources"""
    v = law.entropy_variables(u)
    conv = parts.volume + parts.boundary_ec
    scale = float(np.sum(np.abs(v) * np.abs(conv))) + np.finfo(float).tiny
    return EntropyBalance(
        convective=-float(np.sum(v * conv)),
        boundary=-float(np.sum(v * parts.boundary_penalty)),
        viscous=-float(np.sum(v * parts.viscous)),
        scale=scale,
    )


def conserved_integrals(u: np.ndarray, h: float) -> np.ndarray:
    return h * u.sum(axis=0)


class FullOrderModel:
    """Bundles law, operators and configuration for one full-order run"""

    def __init__(self, cfg: FomConfig, law: Optional[ConservationLaw] = None, ops: Optional[FomOperators] = None):
        cfg.validate()
        self.cfg = cfg
        self.law = law or make_law(cfg.law, cfg.dim, cfg.gamma)
        self.ops = ops or build_fom_operators(cfg.k_cells, cfg.dx, cfg.dim, cfg.periodic)

    @property
    def h(self) -> float:
        return self.ops.cell_measure

    def grid(self) -> np.ndarray:
        return self.ops.grid_points(self.cfg.domain)

    def initial_state(self) -> np.ndarray:
        return evaluate_initial_condition(
            self.cfg.initial_condition, self.grid(), self.law, self.cfg.ic_params
        )

    def rhs(self, t: float, u: np.ndarray) -> np.ndarray:
        return fom_rhs(u, self.ops, self.law, self.cfg)

    def rhs_parts(self, u: np.ndarray) -> FomRhsParts:
        return fom_rhs_parts(u, self.ops, self.law, self.cfg)

    def stable_dt(self, u: np.ndarray) -> float:
        return cfl_step(self.cfg.cfl, self.ops.dx, self.law.max_wavespeed(u))

    def total_entropy(self, u: np.ndarray) -> float:
        return total_entropy(u, self.h, self.law)

    def step_record(self, step: int, t: float, dt: float, u: np.ndarray) -> StepRecord:
        balance = entropy_balance(u, self.rhs_parts(u), self.law)
        return StepRecord(
            step=step,
            time=t,
            dt=dt,
            total_entropy=self.total_entropy(u),
            balance=balance,
            conserved=conserved_integrals(u, self.h),
        )

    def integrate(self, u0: Optional[np.ndarray] = None, diagnostics: bool = False):
        """Run to final time; see ``rk_integrate``"""
        return rk_integrate(self, u0, diagnostics=diagnostics)


def rk_integrate(model: FullOrderModel, u0: Optional[np.ndarray] = None, diagnostics: bool = False):
    """Integrate the FOM with LSRK4(5), recording snapshots.

    Args:
        model: Full-order model
        u0: Initial field (defaults to the configured initial condition)
        diagnostics: Collect a StepRecord per step (one extra RHS split per step)

    Returns:
        (SnapshotSet, list of StepRecord)
    """
    cfg = model.cfg
    if u0 is None:
        u0 = model.initial_state()
    model.law.check_admissible(u0)

    records: List[StepRecord] = []
    observer = None
    if diagnostics:
        def observer(step, t, dt, u):
            records.append(model.step_record(step, t, dt, u))

    times, states, steps = integrate(
        u0,
        model.rhs,
        cfg.final_time,
        model.stable_dt,
        stride=cfg.snapshot_stride,
        fixed_dt=cfg.fixed_dt,
        max_steps=cfg.max_steps,
        observer=observer,
    )
    config_echo = dataclasses.asdict(cfg)
    config_echo["domain"] = list(cfg.domain)
    snaps = SnapshotSet(
        states=np.stack(states, axis=-1),
        times=np.asarray(times),
        dim=cfg.dim,
        dx=cfg.dx,
        config=config_echo,
        fingerprint=fingerprint_of(config_echo),
        steps=steps,
    )
    logger.info(
        "FOM: %d steps to t = %.4g, %d snapshots recorded", steps, times[-1], snaps.n_snapshots
    )
    return snaps, records
