"""
Utility functions for esrom.

This module contains console summaries and CSV/gnuplot writers used by the CLI.
"""

import csv
from pathlib import Path
from typing import TYPE_CHECKING, List, Sequence

import numpy as np

if TYPE_CHECKING:
    from .models import CubatureRule, ReducedBasis, SnapshotSet, StepRecord
    from .report import DiagnosticReport

CSV_COLUMNS = ["step", "time", "total_entropy", "convective_entropy_term", "viscous_dissipation"]


def print_stage_header(title: str):
    """Print a stage banner"""
    print(f"\n{'='*80}")
    print(title)
    print(f"{'='*80}")


def print_snapshot_summary(snaps: 'SnapshotSet'):
    """Print FOM run summary"""
    print(f"  Grid: {snaps.n_points} points ({snaps.dim}D), dx = {snaps.dx:.4g}")
    print(f"  Steps: {snaps.steps}, final time {snaps.times[-1]:.4g}")
    print(f"  Snapshots recorded: {snaps.n_snapshots}")


def print_basis_summary(basis: 'ReducedBasis'):
    """Print POD basis summary"""
    print(f"  Modes: {basis.n_modes} ({basis.n_pod_modes} POD", end="")
    print(" + constant)" if basis.constant_added else ")")
    print(f"  Truncation tol: {basis.tol:.3e}")
    print(f"  Entropy-variable enrichment: {'yes' if basis.enriched else 'no'}")
    s = basis.singular_values
    shown = ", ".join(f"{x:.3e}" for x in s[:5])
    print(f"  Leading singular values: {shown}" + (" ..." if s.size > 5 else ""))


def print_rule_summary(label: str, rule: 'CubatureRule'):
    """Print one cubature rule"""
    print(f"\n{label}:")
    if len(rule) == 0:
        print("  No points")
        return
    print(f"  {len(rule)} point(s), residual {rule.residual:.3e}")
    if rule.n_stabilizing:
        print(f"  including {rule.n_stabilizing} stabilizing point(s)")
    for d, c in sorted(rule.condition.items()):
        print(f"  test mass condition (direction {d + 1}): {c:.3e}")
    w = rule.weights
    print(f"  weights in [{w.min():.3e}, {w.max():.3e}], sum {w.sum():.6g}")


def print_rom_summary(cost: dict, records: Sequence['StepRecord']):
    """Print ROM cost and entropy summary"""
    print(f"  Modes N = {cost['modes']}")
    print(f"  Volume points {cost['volume_points']} (stabilizing {cost['stabilizing_points']}), "
          f"boundary {cost['boundary_points']}, viscous interfaces {cost['viscous_interfaces']}")
    print(f"  Flux evaluations per RHS: {cost['flux_evaluations']}, alpha = {cost['alpha']:.2f}")
    if records:
        rel = max(abs(r.balance.convective) / r.balance.scale for r in records)
        print(f"  Steps: {len(records)}, max |convective entropy term| / scale = {rel:.3e}")
        print(f"  Entropy: {records[0].total_entropy:.10g} -> {records[-1].total_entropy:.10g}")


def print_report(report: 'DiagnosticReport'):
    """Print diagnose output"""
    print(f"  Final relative L2 error: {report.final_error:.4e}")
    if report.errors.size:
        print(f"  Max relative L2 error over {report.errors.size} time(s): {report.errors.max():.4e}")
    if report.entropy:
        print(f"  Max |convective entropy term| / scale: {report.max_relative_convective:.3e}")
        print(f"  Min viscous dissipation: {report.min_viscous_dissipation:.3e}")
    if report.conserved_drift is not None:
        drift = ", ".join(f"{d:.2e}" for d in report.conserved_drift)
        print(f"  Conserved integral drift: {drift}")
    if report.singular_values:
        print("\n  N     tol(N)")
        for n, tol in report.singular_values:
            print(f"  {n:<5d} {tol:.3e}")
    if report.projection_errors is not None:
        print(f"\n  Max snapshot projection error: {report.projection_errors.max():.3e}")
    if report.point_counts:
        print("\n  Point counts:")
        for key, value in report.point_counts.items():
            print(f"    {key}: {value}")


def write_records_csv(path, records: Sequence['StepRecord'], component_names: List[str]):
    """Per-step diagnostics: step, time, total_entropy, convective_entropy_term,
    viscous_dissipation, conserved components, dt, boundary_entropy_term"""
    header = CSV_COLUMNS + [f"conserved_{c}" for c in component_names] + ["dt", "boundary_entropy_term"]
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for r in records:
            writer.writerow(
                [r.step, repr(r.time), repr(r.total_entropy), repr(r.balance.convective),
                 repr(r.balance.viscous_dissipation)]
                + [repr(float(c)) for c in r.conserved]
                + [repr(r.dt), repr(r.balance.boundary)]
            )


def write_error_csv(path, times: np.ndarray, errors: np.ndarray):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["time", "relative_l2_error"])
        for t, e in zip(times, errors):
            writer.writerow([repr(float(t)), repr(float(e))])


def _entropy_script(out_dir: Path, stem: str) -> Path:
    path = out_dir / f"{stem}_entropy.gp"
    path.write_text(
        "set datafile separator ','\n"
        "set key autotitle columnhead\n"
        "set xlabel 'time'\n"
        "set logscale y\n"
        f"plot '{stem}.csv' using 2:(abs($4)) with lines title '|convective entropy term|', \\\n"
        f"     '{stem}.csv' using 2:(abs($5)) with lines title 'viscous dissipation'\n"
        "pause -1\n"
    )
    return path


def _error_script(out_dir: Path, stem: str) -> Path:
    path = out_dir / f"{stem}_error.gp"
    path.write_text(
        "set datafile separator ','\n"
        "set xlabel 'time'\n"
        "set ylabel 'relative L2 error'\n"
        f"plot '{stem}_error.csv' using 1:2 skip 1 with linespoints notitle\n"
        "pause -1\n"
    )
    return path


def write_gnuplot_scripts(out_dir, stem: str, has_entropy: bool = True, has_errors: bool = False) -> List[Path]:
    """Ready-to-run gnuplot scripts for the CSV outputs

    Args:
        out_dir: Directory holding the CSV files
        stem: CSV stem; reads {stem}.csv and {stem}_error.csv
        has_entropy: Plot the per-step entropy terms of {stem}.csv
        has_errors: Plot the error history of {stem}_error.csv
    """
    out_dir = Path(out_dir)
    scripts = []
    if has_entropy:
        scripts.append(_entropy_script(out_dir, stem))
    if has_errors:
        scripts.append(_error_script(out_dir, stem))
    return scripts
