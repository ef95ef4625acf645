"""
Diagnostics of a ROM run against full-order reference snapshots.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .basis import projection_errors, truncation_tol
from .errors import ConfigError
from .models import ReducedBasis, SnapshotSet, StepRecord, Trajectory

logger = logging.getLogger(__name__)


def relative_l2_error(u: np.ndarray, reference: np.ndarray) -> float:
    """Discrete relative L2 error over all conservative variables"""
    ref = float(np.linalg.norm(reference))
    err = float(np.linalg.norm(np.asarray(u) - reference))
    return err / ref if ref > 0.0 else err


def interpolate_coefficients(traj: Trajectory, t: float) -> np.ndarray:
    """Linear interpolation of the coefficient history at time t"""
    times = traj.times
    j = int(np.searchsorted(times, t))
    if j <= 0:
        return traj.coefficients[..., 0]
    if j >= times.size:
        return traj.coefficients[..., -1]
    t0, t1 = times[j - 1], times[j]
    theta = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
    return (1.0 - theta) * traj.coefficients[..., j - 1] + theta * traj.coefficients[..., j]


def error_history(candidate, reference: SnapshotSet, basis: Optional[ReducedBasis] = None):
    """Relative L2 errors at the reference snapshot times inside the candidate's time range

    Args:
        candidate: Trajectory (needs ``basis``) or SnapshotSet
        reference: Full-order snapshots

    Returns:
        (times, errors)
    """
    times, errors = [], []
    if isinstance(candidate, SnapshotSet):
        for j, t in enumerate(reference.times):
            k = int(np.argmin(np.abs(candidate.times - t)))
            if abs(candidate.times[k] - t) <= 1e-12 * max(1.0, abs(t)):
                times.append(float(t))
                errors.append(relative_l2_error(candidate.state(k), reference.state(j)))
        return np.asarray(times), np.asarray(errors)

    if basis is None:
        raise ConfigError("a basis is needed to reconstruct ROM trajectories")
    t_end = candidate.times[-1]
    for j, t in enumerate(reference.times):
        if t > t_end * (1.0 + 1e-12):
            continue
        u = basis.v_matrix @ interpolate_coefficients(candidate, t)
        times.append(float(t))
        errors.append(relative_l2_error(u, reference.state(j)))
    return np.asarray(times), np.asarray(errors)


def entropy_trace(records: List[StepRecord]) -> Dict[str, np.ndarray]:
    """Per-step entropy diagnostics as column arrays"""
    return {
        "step": np.array([r.step for r in records], dtype=np.int64),
        "time": np.array([r.time for r in records]),
        "total_entropy": np.array([r.total_entropy for r in records]),
        "convective": np.array([r.balance.convective for r in records]),
        "boundary": np.array([r.balance.boundary for r in records]),
        "viscous_dissipation": np.array([r.balance.viscous_dissipation for r in records]),
        "scale": np.array([r.balance.scale for r in records]),
    }


def singular_value_table(singular_values: np.ndarray, modes=(5, 10, 15, 25, 50, 75, 100)):
    """(N, tol(N)) rows for the POD spectrum"""
    s = np.asarray(singular_values)
    return [(n, truncation_tol(s, n)) for n in modes if n <= s.size]


@dataclass
class DiagnosticReport:
    """Everything ``diagnose`` prints and writes"""
    final_error: float
    times: np.ndarray
    errors: np.ndarray
    entropy: Dict[str, np.ndarray] = field(default_factory=dict)
    max_relative_convective: float = 0.0
    min_viscous_dissipation: float = 0.0
    conserved_drift: Optional[np.ndarray] = None
    singular_values: List = field(default_factory=list)
    projection_errors: Optional[np.ndarray] = None
    point_counts: Dict[str, float] = field(default_factory=dict)


def diagnose(candidate, reference: SnapshotSet, basis: Optional[ReducedBasis] = None,
             point_counts: Optional[dict] = None) -> DiagnosticReport:
    """Compare a ROM trajectory (or another snapshot set) with reference snapshots"""
    n_points = basis.n_points if basis is not None else candidate.n_points
    if n_points != reference.n_points:
        raise ConfigError(
            f"reference snapshots have {reference.n_points} points, candidate has {n_points}"
        )
    times, errors = error_history(candidate, reference, basis)
    if isinstance(candidate, SnapshotSet):
        final = relative_l2_error(candidate.final_state(), reference.final_state())
        records: List[StepRecord] = []
    else:
        final = relative_l2_error(basis.v_matrix @ candidate.coefficients[..., -1], reference.final_state())
        records = candidate.records

    report = DiagnosticReport(final_error=final, times=times, errors=errors)
    if records:
        trace = entropy_trace(records)
        report.entropy = trace
        report.max_relative_convective = float(np.max(np.abs(trace["convective"]) / trace["scale"]))
        report.min_viscous_dissipation = float(np.min(trace["viscous_dissipation"]))
        conserved = np.array([r.conserved for r in records])
        ref = np.maximum(np.abs(conserved[0]), 1.0)
        report.conserved_drift = np.max(np.abs(conserved - conserved[0]), axis=0) / ref
    if basis is not None:
        report.singular_values = singular_value_table(basis.singular_values)
        report.projection_errors = projection_errors(basis.v_matrix, reference)
    report.point_counts = dict(point_counts or {})
    logger.info("diagnose: final relative L2 error %.4e", final)
    return report
