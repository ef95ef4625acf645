"""
POD reduced basis construction.

Snapshot columns hold one solution component each, so a single spatial basis
serves every component. Snapshots are not mean-centered.
"""

import logging
from typing import Optional

import numpy as np
import scipy.linalg

from .config import BasisConfig, fingerprint_of
from .errors import ConfigError
from .models import ReducedBasis, SnapshotSet
from .numerics import thin_svd
from .physics import ConservationLaw

logger = logging.getLogger(__name__)

CONSTANT_MODE_TOL = 1e-10


def assemble_snapshots(snaps: SnapshotSet, stride: int, enrich: bool, law: ConservationLaw) -> np.ndarray:
    """Stack subsampled snapshots as columns (one column per component)

    Args:
        snaps: Recorded states
        stride: Keep snapshots 0, stride, 2*stride, ...
        enrich: Append entropy-variable snapshots of the same states

    Returns:
        (n_points, n_columns) snapshot matrix
    """
    if stride < 1:
        raise ConfigError(f"subsampling stride must be >= 1, got {stride}")
    selected = list(range(0, snaps.n_snapshots, stride))
    if not selected:
        raise ConfigError("snapshot selection is empty")

    states = snaps.states[:, :, selected]
    cols = [states.reshape(snaps.n_points, -1)]
    if enrich:
        v = law.entropy_variables(np.moveaxis(states, 2, 0))
        cols.append(np.moveaxis(v, 0, 2).reshape(snaps.n_points, -1))
    matrix = np.concatenate(cols, axis=1)
    logger.debug(
        "snapshot matrix %d x %d (%d states, enrich=%s)",
        matrix.shape[0], matrix.shape[1], len(selected), enrich,
    )
    return matrix


def truncation_tol(singular_values: np.ndarray, n_modes: int) -> float:
    """sqrt(sum_{j>N} s_j^2 / sum_j s_j^2)"""
    s2 = np.asarray(singular_values, dtype=np.float64) ** 2
    total = s2.sum()
    if total == 0.0:
        return 0.0
    return float(np.sqrt(s2[n_modes:].sum() / total))


def pod(snapshot_matrix: np.ndarray, n_modes: int) -> ReducedBasis:
    """Leading left singular vectors of the snapshot matrix

    Raises:
        ConfigError: if n_modes exceeds the numerical rank
    """
    svd = thin_svd(snapshot_matrix)
    s = svd.singular_values
    rank = 0
    if s.size and s[0] > 0.0:
        rank = int(np.count_nonzero(s > s[0] * max(snapshot_matrix.shape) * np.finfo(float).eps))
    if n_modes > rank:
        raise ConfigError(
            f"requested {n_modes} modes but the snapshot matrix has numerical rank {rank}"
        )
    basis = ReducedBasis(
        v_matrix=np.ascontiguousarray(svd.left_vectors[:, :n_modes]),
        singular_values=s.copy(),
        tol=truncation_tol(s, n_modes),
        n_pod_modes=n_modes,
    )
    logger.info("POD: %d modes, tol = %.3e (rank %d)", n_modes, basis.tol, rank)
    return basis


def constant_residual(v_matrix: np.ndarray) -> float:
    """Norm of the part of the normalized constant vector outside range(V)"""
    e = np.full(v_matrix.shape[0], 1.0 / np.sqrt(v_matrix.shape[0]))
    return float(np.linalg.norm(e - v_matrix @ (v_matrix.T @ e)))


def ensure_constant_mode(basis: ReducedBasis) -> ReducedBasis:
    """Prepend the constant vector when it is not in range(V)

    The returned basis stays orthonormal; its first column is the normalized
    constant vector when augmentation happened.
    """
    if constant_residual(basis.v_matrix) <= CONSTANT_MODE_TOL:
        return basis

    n = basis.n_points
    e = np.full((n, 1), 1.0 / np.sqrt(n))
    q, r = scipy.linalg.qr(np.hstack([e, basis.v_matrix]), mode="economic")
    q = q * np.sign(np.where(np.diag(r) == 0.0, 1.0, np.diag(r)))
    logger.info("added constant mode (basis now %d modes)", q.shape[1])
    return ReducedBasis(
        v_matrix=np.ascontiguousarray(q),
        singular_values=basis.singular_values,
        tol=basis.tol,
        n_pod_modes=basis.n_pod_modes,
        enriched=basis.enriched,
        constant_added=True,
        fingerprint=basis.fingerprint,
        parents=list(basis.parents),
    )


def build_basis(snaps: SnapshotSet, cfg: BasisConfig, law: ConservationLaw, n_modes: Optional[int] = None) -> ReducedBasis:
    """Snapshot matrix -> POD -> optional constant mode, with provenance"""
    n_modes = n_modes or cfg.n_modes
    matrix = assemble_snapshots(snaps, cfg.subsample, cfg.enrich, law)
    basis = pod(matrix, n_modes)
    basis.enriched = cfg.enrich
    if cfg.constant_mode:
        basis = ensure_constant_mode(basis)
    basis.parents = [snaps.fingerprint]
    basis.fingerprint = fingerprint_of(
        {"n_modes": n_modes, "subsample": cfg.subsample, "enrich": cfg.enrich,
         "constant_mode": cfg.constant_mode},
        basis.parents,
    )
    return basis


def projection_errors(v_matrix: np.ndarray, snaps: SnapshotSet) -> np.ndarray:
    """Relative L2 projection error of every snapshot (all components)"""
    x = snaps.states.reshape(snaps.n_points, -1)
    err = x - v_matrix @ (v_matrix.T @ x)
    err = np.sqrt((err ** 2).reshape(snaps.n_points, snaps.n_components, -1).sum(axis=(0, 1)))
    ref = np.sqrt((x ** 2).reshape(snaps.n_points, snaps.n_components, -1).sum(axis=(0, 1)))
    return err / np.where(ref > 0.0, ref, 1.0)
