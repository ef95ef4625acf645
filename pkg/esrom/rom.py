"""
Hyper-reduced entropy-stable Galerkin ROM.

Offline: test bases V_t = span{1, V, Q V}, the projection P_t onto them from
the hyper-reduced points, the compressed-and-projected operators
Q_t = P_t^T (V_t^T Q V_t) P_t and, for walls, the hybridized operators Q_h.

Online: entropy projection of the modal coefficients, flux differencing
over all pairs of evaluation points, boundary fluxes, artificial viscosity
and an M_N solve.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .errors import ConfigError, NotPositiveDefiniteError
from .fom import FullOrderModel, fom_rhs
from .models import CubatureRule, EntropyBalance, ReducedBasis, StepRecord, Trajectory
from .numerics import solve_spd, thin_svd
from .operators import FomOperators
from .physics import ConservationLaw
from .timestepping import cfl_step, integrate

logger = logging.getLogger(__name__)

TEST_BASIS_RTOL = 1e-10
PAIR_CHUNK = 64


# -- offline operators ---------------------------------------------------------

def build_test_basis(v: np.ndarray, q) -> np.ndarray:
    """Orthonormal basis of span{1, V, Q V}

    Args:
        v: Reduced basis (n_points, N)
        q: Difference operator of one direction (dense or sparse)
    """
    n = v.shape[0]
    qv = np.asarray(q @ v)
    norms = np.linalg.norm(qv, axis=0)
    qv = qv[:, norms > 0.0] / norms[norms > 0.0]
    stacked = np.hstack([np.full((n, 1), 1.0 / np.sqrt(n)), v, qv])
    svd = thin_svd(stacked)
    s = svd.singular_values
    rank = int(np.count_nonzero(s > s[0] * TEST_BASIS_RTOL))
    return np.ascontiguousarray(svd.left_vectors[:, :rank])


def projection_matrix(v_t_rows: np.ndarray, weights: np.ndarray, label: str = "test mass matrix") -> np.ndarray:
    """P_t = (V_t(I)^T W V_t(I))^{-1} V_t(I)^T W

    Raises:
        NotPositiveDefiniteError: if the hyper-reduced test mass matrix is singular
    """
    vtw = v_t_rows.T * weights[None, :]
    m = vtw @ v_t_rows
    m = 0.5 * (m + m.T)
    try:
        return solve_spd(m, vtw, context=label)
    except NotPositiveDefiniteError as e:
        raise NotPositiveDefiniteError(
            e.pivot, f"{label} is singular; add stabilizing points"
        ) from e


def hyper_reduced_diff(qhat_t: np.ndarray, p_t: np.ndarray, skew: bool = True) -> np.ndarray:
    """Q_t = P_t^T Q_hat_t P_t, exactly skew-symmetrized when ``skew``"""
    q_t = p_t.T @ qhat_t @ p_t
    if skew:
        q_t = 0.5 * (q_t - q_t.T)
    return q_t


def hybridized_sbp(q_t: np.ndarray, e: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Q_h = 1/2 [[Q_t - Q_t^T, E^T B], [-B E, B]] with B = diag(b)

    The lower-left block is the negated transpose of the upper-right one, so
    Q_h + Q_h^T = blockdiag(0, B) holds exactly.
    """
    n_vol, n_b = q_t.shape[0], e.shape[0]
    top_right = 0.5 * (e.T * b[None, :])
    q_h = np.zeros((n_vol + n_b, n_vol + n_b))
    q_h[:n_vol, :n_vol] = 0.5 * (q_t - q_t.T)
    q_h[:n_vol, n_vol:] = top_right
    q_h[n_vol:, :n_vol] = -top_right.T
    q_h[n_vol:, n_vol:] = np.diag(0.5 * b)
    return q_h


@dataclass
class BoundaryBlock:
    """Hyper-reduced boundary data (wall problems)"""
    entries: np.ndarray          # indices into the full boundary node list
    points: np.ndarray           # grid point of each entry
    normals: np.ndarray          # (n_b, dim)
    weights: np.ndarray          # w_b
    v_rows: np.ndarray           # V_b = V(points, :)
    e: List[np.ndarray] = field(default_factory=list)     # per direction, (n_b, n_vol)
    b: List[np.ndarray] = field(default_factory=list)     # per direction, n_i * w_b
    q_h: List[np.ndarray] = field(default_factory=list)

    def __len__(self):
        return self.points.shape[0]


@dataclass
class ViscousBlock:
    """Sampled interfaces of D and their grid stencil"""
    rows: np.ndarray             # selected rows of D
    weights: np.ndarray          # W_D
    stencil: np.ndarray          # grid points touched by the rows
    d_sub: np.ndarray            # D(rows, stencil)
    v_rows: np.ndarray           # V(stencil, :)

    def __len__(self):
        return self.rows.shape[0]


@dataclass
class RomOperators:
    """Everything the online stage needs

    Evaluation points are ordered [volume, boundary, viscous stencil]; the
    first ``n_volume + n_boundary`` of them carry the flux-differencing
    operator (Q_t or Q_h).
    """
    dim: int
    dx: float
    h: float
    epsilon: float
    periodic: bool
    v_matrix: np.ndarray
    volume_indices: np.ndarray
    volume_weights: np.ndarray
    v_volume: np.ndarray
    test_bases: List[np.ndarray]
    p_t: List[np.ndarray]
    qhat_t: List[np.ndarray]
    q_t: List[np.ndarray]
    mass: np.ndarray
    projection: np.ndarray
    boundary: Optional[BoundaryBlock] = None
    viscous: Optional[ViscousBlock] = None
    vtkv: Optional[np.ndarray] = None
    n_stabilizing: int = 0
    conditions: Dict[int, float] = field(default_factory=dict)

    @property
    def n_modes(self) -> int:
        return self.v_matrix.shape[1]

    @property
    def n_volume(self) -> int:
        return self.volume_indices.shape[0]

    @property
    def n_boundary(self) -> int:
        return 0 if self.boundary is None else len(self.boundary)

    @property
    def n_viscous(self) -> int:
        return 0 if self.viscous is None else len(self.viscous)

    @property
    def eval_points(self) -> np.ndarray:
        parts = [self.volume_indices]
        if self.boundary is not None:
            parts.append(self.boundary.points)
        if self.viscous is not None:
            parts.append(self.viscous.stencil)
        return np.concatenate(parts)

    @property
    def v_eval(self) -> np.ndarray:
        return self.v_matrix[self.eval_points]

    def flux_operator(self, axis: int) -> np.ndarray:
        if self.boundary is not None:
            return self.boundary.q_h[axis]
        return self.q_t[axis]

    def v_hybrid(self) -> np.ndarray:
        """[V(I); V_b]"""
        if self.boundary is None:
            return self.v_volume
        return np.vstack([self.v_volume, self.boundary.v_rows])


def build_rom_operators(
    basis,
    ops: FomOperators,
    volume_rule: CubatureRule,
    epsilon: float = 0.0,
    boundary_rule: Optional[CubatureRule] = None,
    viscous_rule: Optional[CubatureRule] = None,
    test_bases: Optional[List[np.ndarray]] = None,
) -> RomOperators:
    """Assemble the hyper-reduced operators from a basis and cubature rules"""
    v = basis.v_matrix if isinstance(basis, ReducedBasis) else np.asarray(basis)
    idx, w = volume_rule.indices, volume_rule.weights
    if test_bases is None:
        test_bases = [build_test_basis(v, ops.q[a]) for a in range(ops.dim)]

    p_t, qhat_t, q_t = [], [], []
    for axis, vt in enumerate(test_bases):
        p = projection_matrix(vt[idx], w, label=f"test mass matrix (direction {axis + 1})")
        qhat = vt.T @ np.asarray(ops.apply_q(vt, axis))
        if ops.periodic:
            qhat = 0.5 * (qhat - qhat.T)
        p_t.append(p)
        qhat_t.append(qhat)
        q_t.append(hyper_reduced_diff(qhat, p, skew=ops.periodic))

    v_vol = v[idx]
    vw = v_vol.T * w[None, :]
    mass = 0.5 * (vw @ v_vol + (vw @ v_vol).T)
    projection = solve_spd(mass, vw, context="reduced mass matrix")

    boundary = None
    if not ops.periodic:
        if boundary_rule is None:
            raise ConfigError("wall problems need a boundary rule")
        nodes = ops.boundary
        entries = boundary_rule.indices
        points = nodes.index[entries]
        normals = nodes.normal[entries]
        wb = boundary_rule.weights
        boundary = BoundaryBlock(entries, points, normals, wb, v[points])
        for axis, vt in enumerate(test_bases):
            e = vt[points] @ p_t[axis]
            b = normals[:, axis] * wb
            boundary.e.append(e)
            boundary.b.append(b)
            boundary.q_h.append(hybridized_sbp(q_t[axis], e, b))

    viscous = None
    if viscous_rule is not None and len(viscous_rule) > 0:
        rows = viscous_rule.indices
        pairs = ops.d_pairs[rows]
        stencil = np.unique(pairs)
        d_sub = ops.d_matrix[rows][:, stencil].toarray()
        viscous = ViscousBlock(rows, viscous_rule.weights, stencil, d_sub, v[stencil])

    vtkv = None
    if epsilon > 0.0:
        vtkv = v.T @ np.asarray(ops.apply_k(v))
        vtkv = 0.5 * (vtkv + vtkv.T)

    rom_ops = RomOperators(
        dim=ops.dim,
        dx=ops.dx,
        h=ops.cell_measure,
        epsilon=epsilon,
        periodic=ops.periodic,
        v_matrix=v,
        volume_indices=idx,
        volume_weights=w,
        v_volume=v_vol,
        test_bases=list(test_bases),
        p_t=p_t,
        qhat_t=qhat_t,
        q_t=q_t,
        mass=mass,
        projection=projection,
        boundary=boundary,
        viscous=viscous,
        vtkv=vtkv,
        n_stabilizing=volume_rule.n_stabilizing,
        conditions=dict(volume_rule.condition),
    )
    logger.info(
        "ROM operators: N=%d, %d volume, %d boundary, %d viscous interfaces",
        rom_ops.n_modes, rom_ops.n_volume, rom_ops.n_boundary, rom_ops.n_viscous,
    )
    return rom_ops


# -- online evaluation ---------------------------------------------------------

def entropy_project(u_n: np.ndarray, rom_ops: RomOperators, law: ConservationLaw):
    """Entropy-projected conservative variables at every evaluation point

    Returns:
        (v_tilde, u_tilde, v_N) with v_N = P v(V(I) u_N), v_tilde = V_eval v_N,
        u_tilde = u(v_tilde)
    """
    u_vol = rom_ops.v_volume @ u_n
    law.check_admissible(u_vol)
    v_n = rom_ops.projection @ law.entropy_variables(u_vol)
    v_tilde = rom_ops.v_eval @ v_n
    u_tilde = law.conservative_from_entropy(v_tilde)
    law.check_admissible(u_tilde)
    return v_tilde, u_tilde, v_n


def flux_contraction(s: np.ndarray, u: np.ndarray, law: ConservationLaw, axis: int,
                     pool: Optional[ThreadPoolExecutor] = None) -> np.ndarray:
    """2 (S o F) 1 with F_jk = f_S(u_j, u_k) over all pairs

    Only the strict upper triangle of F is evaluated; the diagonal is f(u_j).
    Row blocks of the triangle are evaluated in turn, or concurrently with a
    pool, into disjoint slices of F.
    """
    m, n = u.shape
    f = np.empty((m, m, n))
    diag = np.arange(m)
    f[diag, diag] = law.flux_dir(u, axis)

    rows, cols = np.triu_indices(m, 1)

    def fill_block(lo: int, hi: int):
        sel = (rows >= lo) & (rows < hi)
        r, c = rows[sel], cols[sel]
        if r.size:
            pair = law.ec_flux_dir(u[r], u[c], axis)
            f[r, c] = pair
            f[c, r] = pair

    # identical row blocks with or without a pool
    bounds = [(lo, min(lo + PAIR_CHUNK, m)) for lo in range(0, m, PAIR_CHUNK)]
    if pool is None:
        for lo, hi in bounds:
            fill_block(lo, hi)
    else:
        list(pool.map(lambda b: fill_block(*b), bounds))
    return 2.0 * np.einsum("jk,jkc->jc", s, f)


@dataclass
class RomRhsParts:
    """Bracket terms of M_N du_N/dt = -(convective + boundary_ec + boundary_penalty + viscous)"""
    convective: np.ndarray
    boundary_ec: np.ndarray
    boundary_penalty: np.ndarray
    viscous: np.ndarray
    v_n: np.ndarray
    dissipation: float = 0.0
    scale: float = 0.0

    def total(self) -> np.ndarray:
        return self.convective + self.boundary_ec + self.boundary_penalty + self.viscous

    def balance(self) -> EntropyBalance:
        conv = self.convective + self.boundary_ec
        return EntropyBalance(
            convective=-float(np.sum(self.v_n * conv)),
            boundary=-float(np.sum(self.v_n * self.boundary_penalty)),
            viscous=-float(np.sum(self.v_n * self.viscous)),
            scale=self.scale + np.finfo(float).tiny,
        )


def viscous_rhs_v1(u_tilde_s, v_n, rom_ops: RomOperators, law: ConservationLaw):
    """d = eps h (D_s V_s)^T W_D D_s u_tilde(stencil)"""
    vb = rom_ops.viscous
    dv = vb.d_sub @ vb.v_rows
    d = rom_ops.epsilon * rom_ops.h * dv.T @ (vb.weights[:, None] * (vb.d_sub @ u_tilde_s))
    return d, float(np.sum(v_n * d))


def viscous_rhs_v2(u_tilde_s, v_n, rom_ops: RomOperators, law: ConservationLaw):
    """d = eps h (D_s V_s)^T W_D H D_s V_s v_N, H = du/dv at interface averages"""
    vb = rom_ops.viscous
    dv = vb.d_sub @ vb.v_rows
    # each row of D_s has exactly two nonzeros: the interface's grid points
    nz_minus = np.argmax(vb.d_sub < 0.0, axis=1)
    nz_plus = np.argmax(vb.d_sub > 0.0, axis=1)
    u_bar = 0.5 * (u_tilde_s[nz_minus] + u_tilde_s[nz_plus])
    jac = law.jacobian_dudv(u_bar)
    jumps = dv @ v_n
    flux = np.einsum("rab,rb->ra", jac, jumps)
    d = rom_ops.epsilon * rom_ops.h * dv.T @ (vb.weights[:, None] * flux)
    return d, float(np.sum(v_n * d))


def viscous_rhs_v3(u_tilde_vol, v_n, rom_ops: RomOperators, law: ConservationLaw):
    """d = eps h V^T K V P u_tilde(I)"""
    coeffs = rom_ops.projection @ u_tilde_vol
    d = rom_ops.epsilon * rom_ops.h * rom_ops.vtkv @ coeffs
    return d, float(np.sum(v_n * d))


VISCOUS_TREATMENTS = {"v1": viscous_rhs_v1, "v2": viscous_rhs_v2, "v3": viscous_rhs_v3}


class ReducedOrderModel:
    """Online hyper-reduced model

    Args:
        rom_ops: Offline operators
        law: Conservation law
        viscosity: "v1", "v2", "v3" or "none"
        penalty: Include the Lax-Friedrichs boundary penalty
        threads: Worker threads for the flux-pair loop
    """

    def __init__(self, rom_ops: RomOperators, law: ConservationLaw, viscosity: str = "v2",
                 penalty: bool = True, threads: int = 1):
        if viscosity not in VISCOUS_TREATMENTS and viscosity != "none":
            raise ConfigError(f"unknown viscosity treatment '{viscosity}'")
        if viscosity in ("v1", "v2") and rom_ops.epsilon > 0.0 and rom_ops.viscous is None:
            raise ConfigError(f"viscosity {viscosity} needs a viscous rule")
        self.ops = rom_ops
        self.law = law
        self.viscosity = viscosity if rom_ops.epsilon > 0.0 else "none"
        self.penalty = penalty
        self.threads = threads
        self._pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
        self.last_parts: Optional[RomRhsParts] = None

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()

    def rhs_parts(self, u_n: np.ndarray) -> RomRhsParts:
        ops, law = self.ops, self.law
        v_tilde, u_tilde, v_n = entropy_project(u_n, ops, law)
        n_vol, n_b = ops.n_volume, ops.n_boundary
        u_h = u_tilde[:n_vol + n_b]
        v_h = ops.v_hybrid()
        # node-level magnitude of the entropy fluxes, for relative checks
        scale = 0.0

        conv = np.zeros_like(u_n)
        bec = np.zeros_like(u_n)
        bpen = np.zeros_like(u_n)
        for axis in range(ops.dim):
            nodal = flux_contraction(ops.flux_operator(axis), u_h, law, axis, self._pool)
            conv += v_h.T @ nodal
            scale += float(np.sum(np.abs(v_tilde[:n_vol + n_b] * nodal)))
            if ops.boundary is not None:
                bb = ops.boundary
                ub = u_tilde[n_vol:n_vol + n_b]
                bd = bb.b[axis][:, None]
                f_star = law.boundary_flux_dir(ub, bb.normals, axis, penalty=False)
                jump = bd * (f_star - law.flux_dir(ub, axis))
                bec += bb.v_rows.T @ jump
                scale += float(np.sum(np.abs(v_tilde[n_vol:n_vol + n_b] * jump)))
                if self.penalty:
                    u_plus = law.mirror_state(ub, bb.normals)
                    lf = bb.normals[:, axis, None] * law.lax_friedrichs_penalty(ub, u_plus, bb.normals)
                    bpen += bb.v_rows.T @ (bd * lf)

        visc = np.zeros_like(u_n)
        dissipation = 0.0
        if self.viscosity == "v3":
            visc, dissipation = viscous_rhs_v3(u_tilde[:n_vol], v_n, ops, law)
        elif self.viscosity in ("v1", "v2") and ops.viscous is not None:
            u_s = u_tilde[n_vol + n_b:]
            visc, dissipation = VISCOUS_TREATMENTS[self.viscosity](u_s, v_n, ops, law)
        return RomRhsParts(conv, bec, bpen, visc, v_n, dissipation, scale)

    def rhs(self, t: float, u_n: np.ndarray) -> np.ndarray:
        parts = self.rhs_parts(u_n)
        self.last_parts = parts
        return -solve_spd(self.ops.mass, parts.total(), context="reduced mass matrix")

    def stable_dt(self, u_n: np.ndarray, cfl: float) -> float:
        return cfl_step(cfl, self.ops.dx, self.law.max_wavespeed(self.ops.v_volume @ u_n))

    def total_entropy(self, u_n: np.ndarray) -> float:
        """1^T W S(V(I) u_N)"""
        return float(np.sum(self.ops.volume_weights * self.law.entropy(self.ops.v_volume @ u_n)))

    def conserved(self, u_n: np.ndarray) -> np.ndarray:
        """1^T W V(I) u_N per component"""
        return self.ops.volume_weights @ (self.ops.v_volume @ u_n)

    def reconstruct(self, u_n: np.ndarray) -> np.ndarray:
        return self.ops.v_matrix @ u_n

    def initial_coefficients(self, u0: np.ndarray, mode: str = "dense") -> np.ndarray:
        """u_N0 = V^T u0 (dense) or P u0(I) (hyper)"""
        if mode == "hyper":
            return self.ops.projection @ u0[self.ops.volume_indices]
        return self.ops.v_matrix.T @ u0


def rom_rhs(u_n: np.ndarray, rom_ops: RomOperators, law: ConservationLaw, viscosity: str = "v2",
            penalty: bool = True) -> np.ndarray:
    """du_N/dt of the hyper-reduced model"""
    return ReducedOrderModel(rom_ops, law, viscosity, penalty).rhs(0.0, u_n)


def rom_integrate(model: ReducedOrderModel, u_n0: np.ndarray, final_time: float, cfl: float,
                  fixed_dt: Optional[float] = None, max_steps: Optional[int] = None) -> Trajectory:
    """LSRK4(5) integration of the ROM with per-step entropy diagnostics"""
    records: List[StepRecord] = []

    def observer(step, t, dt, u_n):
        parts = model.last_parts
        balance = parts.balance()
        records.append(StepRecord(
            step=step,
            time=t,
            dt=dt,
            total_entropy=model.total_entropy(u_n),
            balance=balance,
            conserved=model.conserved(u_n),
        ))

    times, states, steps = integrate(
        u_n0,
        model.rhs,
        final_time,
        lambda u: model.stable_dt(u, cfl),
        stride=1,
        fixed_dt=fixed_dt,
        max_steps=max_steps,
        observer=observer,
    )
    logger.info("ROM: %d steps to t = %.4g", steps, times[-1])
    negative = [r.step for r in records if r.balance.viscous_dissipation < 0.0]
    if negative and model.viscosity == "v3":
        logger.warning("v3 viscosity produced entropy at %d of %d steps (first at step %d)",
                       len(negative), len(records), negative[0])
    return Trajectory(times=np.asarray(times), coefficients=np.stack(states, axis=-1), records=records)


# -- references and diagnostics --------------------------------------------------

class DenseGalerkinModel:
    """Galerkin ROM without hyper-reduction: du_N/dt = V^T f_FOM(u(V V^T v(V u_N)))"""

    def __init__(self, v: np.ndarray, fom: FullOrderModel):
        self.v = v
        self.fom = fom

    def entropy_projected_field(self, u_n: np.ndarray) -> np.ndarray:
        law = self.fom.law
        u = self.v @ u_n
        v_proj = self.v @ (self.v.T @ law.entropy_variables(u))
        return law.conservative_from_entropy(v_proj)

    def rhs(self, t: float, u_n: np.ndarray) -> np.ndarray:
        u_tilde = self.entropy_projected_field(u_n)
        return self.v.T @ fom_rhs(u_tilde, self.fom.ops, self.fom.law, self.fom.cfg)

    def integrate(self, u_n0: np.ndarray, final_time: float, cfl: float) -> Trajectory:
        law, dx = self.fom.law, self.fom.ops.dx
        times, states, _ = integrate(
            u_n0, self.rhs, final_time, lambda u: cfl_step(cfl, dx, law.max_wavespeed(self.v @ u))
        )
        return Trajectory(times=np.asarray(times), coefficients=np.stack(states, axis=-1))


def dense_galerkin_rhs(u_n: np.ndarray, v: np.ndarray, fom: FullOrderModel) -> np.ndarray:
    return DenseGalerkinModel(v, fom).rhs(0.0, u_n)


def cost_estimate(rom_ops: RomOperators) -> dict:
    """Online work per RHS evaluation"""
    m = rom_ops.n_volume + rom_ops.n_boundary
    return {
        "modes": rom_ops.n_modes,
        "volume_points": rom_ops.n_volume,
        "stabilizing_points": rom_ops.n_stabilizing,
        "boundary_points": rom_ops.n_boundary,
        "viscous_interfaces": rom_ops.n_viscous,
        "flux_evaluations": rom_ops.dim * m * (m - 1) // 2,
        "alpha": rom_ops.n_volume / max(rom_ops.n_modes, 1),
    }


def compressed_operator_norm(v: np.ndarray, q) -> dict:
    """||V^T Q V||_2 next to ||V_t^T Q V_t||_2 for the enriched test basis"""
    vt = build_test_basis(v, q)
    return {
        "galerkin": float(np.linalg.norm(v.T @ np.asarray(q @ v), 2)),
        "test_basis": float(np.linalg.norm(vt.T @ np.asarray(q @ vt), 2)),
        "test_dim": int(vt.shape[1]),
    }


def compress_project_error(v_t: np.ndarray, q, f: np.ndarray):
    """(||Q f - (V_t V_t^+)^T Q V_t V_t^+ f||, ||Q||_2 ||f - V_t V_t^+ f||)

    The first value is bounded by the second whenever the projection of f onto
    range(V_t) lies in a subspace S with Q S contained in range(V_t), e.g.
    range(V) for V_t built from {1, V, Q V}.
    """
    qd = q.toarray() if hasattr(q, "toarray") else np.asarray(q)
    pf = v_t @ (v_t.T @ f)
    approx = v_t @ (v_t.T @ (qd @ pf))
    lhs = float(np.linalg.norm(qd @ f - approx))
    rhs = float(np.linalg.norm(qd, 2) * np.linalg.norm(f - pf))
    return lhs, rhs
