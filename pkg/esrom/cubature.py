"""
Hyper-reduction: empirical cubature point and weight selection.

- ``target_space``: Hadamard products of basis columns, SVD-truncated
- ``empirical_cubature``: greedy point selection with (NN)LS weights
- ``stabilizing_points``: extra points for a well-conditioned test mass matrix
- ``viscous_points``: cubature over cell interfaces for the viscous term
- ``boundary_weights``: boundary rule satisfying the discrete SBP constraints
"""

import dataclasses
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .errors import CubatureError
from .models import CubatureRule
from .numerics import lstsq, nnls, thin_svd
from .operators import BoundaryNodes, FomOperators

logger = logging.getLogger(__name__)

MAX_SMALL_EIGENVECTORS = 10
NEGLIGIBLE_ROW = 1e-12
PENALTY_START = 1.0
PENALTY_GROWTH = 10.0
PENALTY_MAX = 1e14


def hadamard_products(v: np.ndarray) -> np.ndarray:
    """All distinct products V(:,i) o V(:,j), i <= j, as columns"""
    n = v.shape[1]
    i, j = np.triu_indices(n)
    return v[:, i] * v[:, j]


def energy_residuals(singular_values: np.ndarray) -> np.ndarray:
    """E_k = sqrt(sum_{j>k} mu_j^2 / sum_j mu_j^2) for k = 0..len"""
    s2 = np.asarray(singular_values, dtype=np.float64) ** 2
    total = s2.sum()
    if total == 0.0:
        return np.zeros(s2.size + 1)
    tail = np.concatenate([np.cumsum(s2[::-1])[::-1], [0.0]])
    return np.sqrt(np.maximum(tail, 0.0) / total)


def truncate_by_energy(columns: np.ndarray, tol: float) -> np.ndarray:
    """Leading left singular vectors of ``columns`` with energy residual <= tol"""
    svd = thin_svd(columns)
    e = energy_residuals(svd.singular_values)
    k = int(np.argmax(e <= tol))
    k = max(k, 1) if svd.singular_values.size and svd.singular_values[0] > 0.0 else 0
    return svd.left_vectors[:, :k]


def target_space(v: np.ndarray, tol: float) -> np.ndarray:
    """Reduced target space for the mass-matrix integrands V_i V_j"""
    if hasattr(v, "v_matrix"):
        v = v.v_matrix
    return truncate_by_energy(hadamard_products(v), tol)


def _best_candidate(scores: np.ndarray, row_norms: np.ndarray, available: np.ndarray) -> int:
    """Highest score among available rows; ties go to the largest integrand"""
    masked = np.where(available, scores, -np.inf)
    best = masked.max()
    ties = masked >= best - 1e-12 * max(abs(best), 1.0)
    return int(np.argmax(np.where(ties, row_norms, -np.inf)))


def empirical_cubature(
    v_target: np.ndarray,
    w_target: np.ndarray,
    tol: float,
    flip: bool = False,
    kind: str = "volume",
) -> CubatureRule:
    """Greedy empirical cubature.

    Repeatedly picks the row of V_target most positively parallel to the
    integration residual, then recomputes the weights by least squares
    (non-negative least squares if any weight is nonpositive).

    Args:
        v_target: (n_candidates, r) integrand values
        w_target: Full-grid weights whose integrals are matched
        tol: Relative residual target ||r|| / ||b||
        flip: Select by argmin of the normalized inner product instead of argmax
        kind: Tag for the returned rule

    Raises:
        CubatureError: if candidates run out before tol is met
    """
    v_target = np.asarray(v_target, dtype=np.float64)
    b = v_target.T @ np.asarray(w_target, dtype=np.float64)
    b_norm = np.linalg.norm(b)
    if b_norm == 0.0:
        return CubatureRule.empty(kind)

    row_norms = np.linalg.norm(v_target, axis=1)
    available = row_norms > NEGLIGIBLE_ROW * row_norms.max()
    normalized = np.divide(
        v_target, row_norms[:, None], out=np.zeros_like(v_target), where=available[:, None]
    )

    selected: List[int] = []
    weights = np.zeros(0)
    r = b.copy()
    rel = 1.0
    history = [rel]
    while rel > tol:
        if not available.any():
            raise CubatureError(
                f"empirical cubature exhausted all {v_target.shape[0]} candidates "
                f"at residual {rel:.3e} > tol {tol:.3e}",
                residual=rel,
            )
        scores = normalized @ (r / np.linalg.norm(r))
        i = _best_candidate(-scores if flip else scores, row_norms, available)
        selected.append(i)
        available[i] = False

        a = v_target[selected].T
        weights = lstsq(a, b)
        if np.any(weights <= 0.0):
            weights = nnls(a, b)
        r = b - a @ weights
        rel = float(np.linalg.norm(r) / b_norm)
        history.append(rel)
        logger.debug("cubature %s: %d points, residual %.3e", kind, len(selected), rel)

    keep = weights > 0.0
    rule = CubatureRule(
        indices=np.asarray(selected, dtype=np.int64)[keep],
        weights=weights[keep],
        kind=kind,
        residual=rel,
        history=history,
    )
    return rule


# -- stabilization -------------------------------------------------------------

def test_mass_matrix(v_t: np.ndarray, rule: CubatureRule) -> np.ndarray:
    """V_t(I,:)^T W V_t(I,:), symmetrized"""
    vi = v_t[rule.indices]
    m = vi.T @ (rule.weights[:, None] * vi)
    return 0.5 * (m + m.T)


def _spectrum(m: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    return scipy.linalg.eigh(m)


def _condition(lam: np.ndarray) -> float:
    if lam.size == 0:
        return 1.0
    if lam[0] <= 0.0:
        return float("inf")
    return float(lam[-1] / lam[0])


def _conditions(bases: Sequence[np.ndarray], rule: CubatureRule) -> Dict[int, float]:
    return {d: _condition(_spectrum(test_mass_matrix(vt, rule))[0]) for d, vt in enumerate(bases)}


def stabilizing_points(
    v_t,
    rule: CubatureRule,
    v_target: np.ndarray,
    w_target: np.ndarray,
    cond_threshold: float = 1e6,
    alpha_z: float = 1e-2,
    tol: float = 1e-8,
    max_rounds: int = 2,
    flip: bool = False,
) -> CubatureRule:
    """Add points until every test mass matrix V_t(I)^T W V_t(I) is well conditioned.

    Each round builds the target Z o Z from the eigenvectors of the small
    eigenvalues, selects points for it and re-solves the volume weights on
    the union with the Z integrals as an extra block scaled by ``alpha_z``.
    When the re-solved rule is still ill conditioned, every stabilizing point
    keeps at least ``alpha_z`` times its weight from the stabilizing rule.

    Args:
        v_t: Test basis, or a sequence of per-direction test bases
        rule: Volume rule built from ``v_target``; never modified
        v_target, w_target: The volume target the rule integrates
        cond_threshold: Largest acceptable condition number
        alpha_z: Weight of the stabilizing integrands in the merged re-solve
        tol: Cubature tolerance for the stabilizing target
        max_rounds: Augmentation rounds before giving up with a warning

    Returns:
        A copy of the input rule with ``condition`` filled in if already well
        conditioned, otherwise a merged rule of kind "stabilizing-merged"
    """
    bases = [v_t] if isinstance(v_t, np.ndarray) else list(v_t)
    b = v_target.T @ w_target
    current = rule
    original = set(rule.indices.tolist())

    for round_no in range(max_rounds + 1):
        z_cols = []
        conditions = {}
        for d, vt in enumerate(bases):
            lam, vecs = _spectrum(test_mass_matrix(vt, current))
            conditions[d] = _condition(lam)
            if conditions[d] <= cond_threshold:
                continue
            cut = lam[-1] * max(1.0 / cond_threshold, 1e-10)
            small = np.flatnonzero(lam < cut)[:MAX_SMALL_EIGENVECTORS]
            z_cols.append(vt @ vecs[:, small])
        current = dataclasses.replace(current, condition=conditions, history=list(current.history))

        if not z_cols:
            return current
        if round_no == max_rounds:
            logger.warning(
                "test mass matrix still ill-conditioned after %d stabilization rounds: %s",
                max_rounds, {d: f"{c:.3e}" for d, c in conditions.items()},
            )
            return current

        z = np.hstack(z_cols)
        z_target = hadamard_products(z)
        d_vec = z_target.T @ w_target
        z_rule = empirical_cubature(z_target, w_target, tol, flip=flip, kind="stabilizing")

        merged = list(current.indices)
        seen = set(merged)
        merged += [i for i in z_rule.indices if i not in seen]
        merged = np.asarray(merged, dtype=np.int64)

        sa = np.sqrt(alpha_z)
        a = np.vstack([v_target[merged].T, sa * z_target[merged].T])
        rhs = np.concatenate([b, sa * d_vec])
        w = nnls(a, rhs)

        trial = CubatureRule(merged[w > 0.0], w[w > 0.0])
        if max(_conditions(bases, trial).values()) > cond_threshold:
            z_weights = dict(zip(z_rule.indices.tolist(), z_rule.weights))
            for k, i in enumerate(merged.tolist()):
                if i in z_weights:
                    w[k] = max(w[k], alpha_z * z_weights[i])
            logger.debug(
                "stabilization round %d: kept the stabilizing weights of %d points", round_no + 1, len(z_weights)
            )

        keep = w > 0.0
        residual = float(np.linalg.norm(v_target[merged[keep]].T @ w[keep] - b) / np.linalg.norm(b))
        current = CubatureRule(
            indices=merged[keep],
            weights=w[keep],
            kind="stabilizing-merged",
            residual=residual,
            history=list(rule.history),
            n_stabilizing=sum(1 for i in merged[keep].tolist() if i not in original),
        )
        logger.info(
            "stabilization round %d: %d stabilizing points, condition %s",
            round_no + 1, len(z_rule), {d: f"{c:.3e}" for d, c in conditions.items()},
        )
    return current


# -- viscous rule --------------------------------------------------------------

def viscous_points(d_matrix, v: np.ndarray, tol: float, flip: bool = False) -> CubatureRule:
    """Cubature over rows of D approximating V_D^T V_D for an orthonormal basis V_D of range(DV)"""
    if hasattr(v, "v_matrix"):
        v = v.v_matrix
    dv = np.asarray(d_matrix @ v)
    svd = thin_svd(dv)
    s = svd.singular_values
    if s.size == 0 or s[0] == 0.0:
        return CubatureRule.empty("viscous")
    rank = int(np.count_nonzero(s > s[0] * 1e-10))
    v_d = svd.left_vectors[:, :rank]
    target = truncate_by_energy(hadamard_products(v_d), tol)
    rule = empirical_cubature(target, np.ones(dv.shape[0]), tol, flip=flip, kind="viscous")
    logger.info("viscous rule: %d interfaces (basis rank %d)", len(rule), rank)
    return rule


# -- boundary rule -------------------------------------------------------------

def boundary_constraints(
    nodes: BoundaryNodes, v_t: Sequence[np.ndarray], ops: FomOperators
) -> Tuple[np.ndarray, np.ndarray]:
    """Constraint system C w_b = c of the discrete fundamental theorem of calculus

    Row block i: V_t^i(p_b,:)^T n_{b,i} w_b = V_t^i^T (Q^i)^T 1.
    """
    ones = np.ones(ops.n_points)
    c_blocks, rhs_blocks = [], []
    for axis, vt in enumerate(v_t):
        c_blocks.append(vt[nodes.index].T * nodes.normal[:, axis][None, :])
        rhs_blocks.append(vt.T @ ops.apply_qt(ones, axis))
    return np.vstack(c_blocks), np.concatenate(rhs_blocks)


def boundary_constraint_residual(rule: CubatureRule, nodes: BoundaryNodes, v_t, ops: FomOperators) -> np.ndarray:
    c, rhs = boundary_constraints(nodes, v_t, ops)
    return c[:, rule.indices] @ rule.weights - rhs


def _penalized_nnls(gram: np.ndarray, g: np.ndarray, cons: np.ndarray, c: np.ndarray, mu: float) -> np.ndarray:
    sm = np.sqrt(mu)
    a = np.vstack([gram, sm * cons])
    return nnls(a, np.concatenate([g, sm * c]))


def boundary_weights(
    nodes: BoundaryNodes,
    v_t: Sequence[np.ndarray],
    ops: FomOperators,
    v: np.ndarray,
    tol: float,
    constraint_tol: float = 5e-8,
    flip: bool = False,
) -> CubatureRule:
    """Nonnegative boundary weights meeting the SBP constraints to ``constraint_tol``.

    Starts from empirical cubature on the boundary Gram integrands, then
    solves a penalized NNLS (penalty x10 per round) and grows the point set by
    the candidate best aligned with the constraint residual until the
    constraints hold.

    Args:
        nodes: Boundary node list of the full grid
        v_t: Per-direction test bases
        ops: Full-order operators
        v: Reduced basis (for the boundary Gram V_b^T W_b V_b)
        tol: Gram cubature tolerance
        constraint_tol: Max absolute residual per constraint

    Raises:
        CubatureError: if the constraints cannot be met with every boundary point
    """
    if hasattr(v, "v_matrix"):
        v = v.v_matrix
    nb = len(nodes)
    if ops.dim == 1:
        return CubatureRule(np.arange(nb), nodes.weight.copy(), kind="boundary", residual=0.0)

    cons, c = boundary_constraints(nodes, v_t, ops)
    gram_cols = truncate_by_energy(hadamard_products(v[nodes.index]), tol)
    g = gram_cols.T @ nodes.weight
    start = empirical_cubature(gram_cols, nodes.weight, tol, flip=flip, kind="boundary")

    selected = list(start.indices)
    if not selected:
        selected = [int(np.argmax(np.linalg.norm(cons, axis=0)))]
    col_norms = np.linalg.norm(cons, axis=0)
    mu = PENALTY_START

    while True:
        idx = np.asarray(selected, dtype=np.int64)
        while True:
            w = _penalized_nnls(gram_cols[idx].T, g, cons[:, idx], c, mu)
            resid = cons[:, idx] @ w - c
            worst = float(np.max(np.abs(resid))) if resid.size else 0.0
            logger.debug("boundary: %d points, mu %.1e, constraint residual %.3e", idx.size, mu, worst)
            if worst <= constraint_tol or mu >= PENALTY_MAX:
                break
            mu *= PENALTY_GROWTH
        if worst <= constraint_tol:
            break

        unused = np.setdiff1d(np.arange(nb), idx)
        if unused.size == 0:
            raise CubatureError(
                f"boundary constraints infeasible with all {nb} boundary points "
                f"(residual {worst:.3e} > {constraint_tol:.1e})",
                residual=worst,
            )
        scores = (cons[:, unused].T @ (-resid)) / np.where(col_norms[unused] > 0.0, col_norms[unused], np.inf)
        pick = int(unused[np.argmin(scores)] if flip else unused[np.argmax(scores)])
        selected.append(pick)
        # resume continuation a few decades below the cap reached
        mu = max(PENALTY_START, mu / PENALTY_GROWTH ** 2)

    keep = w > 0.0
    gram_res = float(np.linalg.norm(gram_cols[idx[keep]].T @ w[keep] - g) / max(np.linalg.norm(g), 1e-300))
    rule = CubatureRule(
        indices=idx[keep], weights=w[keep], kind="boundary", residual=worst, history=[gram_res]
    )
    logger.info(
        "boundary rule: %d of %d boundary entries, constraint residual %.2e, Gram residual %.2e",
        len(rule), nb, worst, gram_res,
    )
    return rule


def mass_matrix_error(v: np.ndarray, rule: CubatureRule, h: float) -> float:
    """||h V^T V - V(I)^T W V(I)||_F / ||h V^T V||_F"""
    full = h * (v.T @ v)
    vi = v[rule.indices]
    approx = vi.T @ (rule.weights[:, None] * vi)
    return float(np.linalg.norm(full - approx) / np.linalg.norm(full))

