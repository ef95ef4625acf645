"""
Pipeline stages.

Each stage takes the previous stage's records plus the run configuration and
returns its own, carrying fingerprints that chain back to the FOM config:

    fom -> pod -> hyperreduce -> rom -> diagnose
"""

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .basis import build_basis
from .config import RunConfig, fingerprint_of
from .cubature import (
    boundary_weights,
    empirical_cubature,
    stabilizing_points,
    target_space,
    viscous_points,
)
from .errors import ConfigError
from .fom import FullOrderModel
from .models import CubatureRule, ReducedBasis, SnapshotSet, StepRecord, Trajectory
from .operators import FomOperators, build_fom_operators
from .physics import ConservationLaw, make_law
from .rom import ReducedOrderModel, RomOperators, build_rom_operators, build_test_basis, rom_integrate

logger = logging.getLogger(__name__)


@dataclass
class RuleSet:
    """Cubature rules of one hyper-reduction run"""
    volume: CubatureRule
    viscous: Optional[CubatureRule] = None
    boundary: Optional[CubatureRule] = None
    tol: float = 0.0
    test_bases: List[np.ndarray] = field(default_factory=list)

    def items(self) -> List[Tuple[str, CubatureRule]]:
        out = [("volume", self.volume)]
        if self.viscous is not None:
            out.append(("viscous", self.viscous))
        if self.boundary is not None:
            out.append(("boundary", self.boundary))
        return out


def setup(cfg: RunConfig) -> Tuple[ConservationLaw, FomOperators]:
    fc = cfg.fom
    return make_law(fc.law, fc.dim, fc.gamma), build_fom_operators(fc.k_cells, fc.dx, fc.dim, fc.periodic)


def run_fom(cfg: RunConfig, diagnostics: bool = False) -> Tuple[SnapshotSet, List[StepRecord], FullOrderModel]:
    law, ops = setup(cfg)
    model = FullOrderModel(cfg.fom, law, ops)
    snaps, records = model.integrate(diagnostics=diagnostics)
    return snaps, records, model


def run_pod(snaps: SnapshotSet, cfg: RunConfig, n_modes: Optional[int] = None) -> ReducedBasis:
    fc = cfg.fom
    if snaps.n_points != fc.k_cells ** fc.dim:
        raise ConfigError(
            f"snapshots have {snaps.n_points} points but the config describes "
            f"{fc.k_cells ** fc.dim}"
        )
    law = make_law(fc.law, fc.dim, fc.gamma)
    return build_basis(snaps, cfg.basis, law, n_modes)


def cubature_tol(basis: ReducedBasis, cfg: RunConfig) -> float:
    """Explicit cubature.tol, or the POD truncation tol floored at min_tol"""
    if cfg.cubature.tol is not None:
        return cfg.cubature.tol
    return max(basis.tol, cfg.cubature.min_tol)


def run_hyperreduce(basis: ReducedBasis, cfg: RunConfig, ops: Optional[FomOperators] = None) -> RuleSet:
    """Volume (+ stabilizing), viscous and boundary rules for a basis"""
    cc, fc = cfg.cubature, cfg.fom
    if ops is None:
        _, ops = setup(cfg)
    v = basis.v_matrix
    tol = cubature_tol(basis, cfg)
    test_bases = [build_test_basis(v, ops.q[a]) for a in range(ops.dim)]

    v_target = target_space(v, tol)
    w_target = np.full(ops.n_points, ops.cell_measure)
    volume = empirical_cubature(v_target, w_target, tol, flip=cc.flip_selection, kind="volume")
    logger.info("volume rule: %d points, residual %.3e (tol %.3e)", len(volume), volume.residual, tol)
    volume = stabilizing_points(
        test_bases, volume, v_target, w_target,
        cond_threshold=cc.cond_threshold,
        alpha_z=cc.alpha_z,
        tol=tol,
        max_rounds=cc.max_stabilize_rounds,
        flip=cc.flip_selection,
    )

    viscous = None
    if fc.epsilon > 0.0:
        viscous = viscous_points(ops.d_matrix, v, tol, flip=cc.flip_selection)

    boundary = None
    if not ops.periodic:
        boundary = boundary_weights(
            ops.boundary, test_bases, ops, v, tol,
            constraint_tol=cc.boundary_tol, flip=cc.flip_selection,
        )

    rules = RuleSet(volume, viscous, boundary, tol, test_bases)
    payload = dataclasses.asdict(cc)
    payload["tol_used"] = tol
    for name, rule in rules.items():
        rule.parents = [basis.fingerprint]
        rule.fingerprint = fingerprint_of({"rule": name, **payload}, rule.parents)
    return rules


def assemble_rom(basis: ReducedBasis, rules: RuleSet, cfg: RunConfig,
                 ops: Optional[FomOperators] = None) -> RomOperators:
    if ops is None:
        _, ops = setup(cfg)
    return build_rom_operators(
        basis, ops, rules.volume,
        epsilon=cfg.fom.epsilon,
        boundary_rule=rules.boundary,
        viscous_rule=rules.viscous,
        test_bases=rules.test_bases or None,
    )


def bundle_fingerprint(basis: ReducedBasis, rules: RuleSet, cfg: RunConfig) -> Tuple[str, List[str]]:
    parents = [basis.fingerprint] + [r.fingerprint for _, r in rules.items()]
    return fingerprint_of(dataclasses.asdict(cfg.rom), parents), parents


def run_rom(rom_ops: RomOperators, cfg: RunConfig, law: Optional[ConservationLaw] = None,
            u0: Optional[np.ndarray] = None, parents: Optional[List[str]] = None) -> Trajectory:
    """Integrate the hyper-reduced model from the configured initial condition"""
    fc, rc = cfg.fom, cfg.rom
    if law is None:
        law = make_law(fc.law, fc.dim, fc.gamma)
    if u0 is None:
        fom = FullOrderModel(fc, law)
        u0 = fom.initial_state()
    final_time = rc.final_time if rc.final_time is not None else fc.final_time
    cfl = rc.cfl if rc.cfl is not None else fc.cfl

    with ReducedOrderModel(rom_ops, law, rc.viscosity, rc.boundary_penalty, rc.threads) as model:
        u_n0 = model.initial_coefficients(u0, rc.initial_condition)
        traj = rom_integrate(model, u_n0, final_time, cfl, fixed_dt=fc.fixed_dt, max_steps=fc.max_steps)

    traj.config = dataclasses.asdict(rc)
    traj.parents = list(parents or [])
    traj.fingerprint = fingerprint_of({"rom": traj.config, "final_time": final_time}, traj.parents)
    return traj


@dataclass
class PipelineResult:
    """All records of one end-to-end run"""
    snapshots: SnapshotSet
    basis: ReducedBasis
    rules: RuleSet
    rom_ops: RomOperators
    trajectory: Trajectory
    fom_records: List[StepRecord] = field(default_factory=list)


def run_all(cfg: RunConfig, n_modes: Optional[int] = None) -> PipelineResult:
    """fom -> pod -> hyperreduce -> rom in memory"""
    law, ops = setup(cfg)
    model = FullOrderModel(cfg.fom, law, ops)
    snaps, fom_records = model.integrate()
    basis = build_basis(snaps, cfg.basis, law, n_modes)
    rules = run_hyperreduce(basis, cfg, ops)
    rom_ops = assemble_rom(basis, rules, cfg, ops)
    fp, _ = bundle_fingerprint(basis, rules, cfg)
    traj = run_rom(rom_ops, cfg, law, u0=snaps.state(0), parents=[fp, basis.fingerprint])
    return PipelineResult(snaps, basis, rules, rom_ops, traj, fom_records)
