"""
Tests for the command-line pipeline
"""

import csv

import pytest

from esrom import artifacts
from esrom.cli import main
from esrom.database import ArtifactRegistry


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def pipeline_dir(tmp_path_factory):
    """fom -> pod -> hyperreduce -> rom on a coarse periodic Euler problem"""
    out = tmp_path_factory.mktemp("pipeline")
    reg = out / "registry.db"
    common = ["--out", out, "--registry", reg]
    assert run("fom", "--preset", "euler1d-periodic", "--scale", "0.25", "--diagnostics", *common) == 0
    assert run("pod", out / "snapshots.esnap", "--modes", "6", *common) == 0
    assert run("hyperreduce", out / "basis.ebasis", *common) == 0
    assert run("rom", out / "basis.ebasis", "--rules", out / "rule_volume.ecuba", "--gnuplot", *common) == 0
    return out


def test_preset_list(capsys):
    """Test that every preset is listed"""
    assert run("preset", "list") == 0
    out = capsys.readouterr().out
    for name in ("euler1d-wall", "euler1d-periodic", "kh2d", "pulse2d", "burgers1d"):
        assert name in out


def test_pipeline_outputs(pipeline_dir):
    """Test the files each stage writes"""
    for name in ("snapshots.esnap", "basis.ebasis", "rule_volume.ecuba", "rom.eromb", "rom.etraj",
                 "fom.csv", "rom.csv", "rom_entropy.gp"):
        assert (pipeline_dir / name).exists(), f"{name} should be written"
    assert not (pipeline_dir / "rule_boundary.ecuba").exists(), "Periodic runs need no boundary rule"

    snaps = artifacts.read_snapshots(pipeline_dir / "snapshots.esnap")
    assert snaps.n_points == 50
    basis, _ = artifacts.read_basis(pipeline_dir / "basis.ebasis")
    assert basis.n_pod_modes == 6
    assert basis.parents == [snaps.fingerprint]
    traj, _ = artifacts.read_trajectory(pipeline_dir / "rom.etraj")
    assert basis.fingerprint in traj.parents

    with open(pipeline_dir / "rom.csv", newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0][:5] == ["step", "time", "total_entropy", "convective_entropy_term", "viscous_dissipation"]
    assert len(rows) - 1 == len(traj.records)


def test_pipeline_registry(pipeline_dir):
    """Test that every artifact is registered with its provenance"""
    registry = ArtifactRegistry(pipeline_dir / "registry.db")
    snaps = artifacts.read_snapshots(pipeline_dir / "snapshots.esnap")
    basis, _ = artifacts.read_basis(pipeline_dir / "basis.ebasis")
    assert registry.has_artifact(snaps.fingerprint)
    assert registry.has_artifact(basis.fingerprint)
    kinds = {row["kind"] for row in registry.derived_from(basis.fingerprint)}
    assert {"rule", "bundle", "trajectory"} <= kinds


def test_diagnose(pipeline_dir, capsys):
    """Test the diagnostics report against the FOM snapshots"""
    code = run(
        "diagnose", pipeline_dir / "rom.etraj",
        "--reference", pipeline_dir / "snapshots.esnap",
        "--basis", pipeline_dir / "basis.ebasis",
        "--bundle", pipeline_dir / "rom.eromb",
        "--out", pipeline_dir, "--gnuplot",
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "Final relative L2 error" in out
    assert "Point counts" in out
    assert (pipeline_dir / "report_error.csv").exists()
    assert (pipeline_dir / "report_error.gp").exists()


def test_diagnose_trajectory_needs_basis(pipeline_dir):
    """Test that reconstructing a trajectory without its basis is a configuration error"""
    code = run("diagnose", pipeline_dir / "rom.etraj", "--reference", pipeline_dir / "snapshots.esnap",
               "--out", pipeline_dir)
    assert code == 2


def test_bad_preset_exit_code(tmp_path, capsys):
    """Test exit code 2 for configuration errors"""
    assert run("fom", "--preset", "nope", "--out", tmp_path, "--registry", tmp_path / "r.db") == 2
    assert "unknown preset" in capsys.readouterr().out


def test_missing_artifact_exit_code(tmp_path):
    """Test exit code 4 for unreadable artifacts"""
    assert run("pod", tmp_path / "missing.esnap", "--out", tmp_path, "--registry", tmp_path / "r.db") == 4


def test_mismatched_rule_exit_code(pipeline_dir, tmp_path):
    """Test exit code 4 when rules were built for a different basis"""
    common = ["--out", tmp_path, "--registry", tmp_path / "r.db"]
    assert run("pod", pipeline_dir / "snapshots.esnap", "--modes", "5", *common) == 0
    code = run("rom", tmp_path / "basis.ebasis", "--rules", pipeline_dir / "rule_volume.ecuba", *common)
    assert code == 4


def test_diagnose_snapshots_against_themselves(pipeline_dir, tmp_path, capsys):
    """Test that the FOM compared with itself has zero error"""
    snaps = pipeline_dir / "snapshots.esnap"
    assert run("diagnose", snaps, "--reference", snaps, "--out", tmp_path) == 0
    assert "Final relative L2 error: 0.0000e+00" in capsys.readouterr().out


def test_pod_with_too_many_modes(pipeline_dir, tmp_path):
    """Test that asking for more modes than snapshots is a configuration error"""
    code = run("pod", pipeline_dir / "snapshots.esnap", "--modes", "100000",
               "--out", tmp_path, "--registry", tmp_path / "r.db")
    assert code == 2


def test_rom_uses_registered_rules(pipeline_dir, tmp_path):
    """Test that the rom stage finds the rules of its basis in the registry when --rules is omitted"""
    code = run("rom", pipeline_dir / "basis.ebasis", "--out", tmp_path, "--registry", pipeline_dir / "registry.db")
    assert code == 0
    traj, _ = artifacts.read_trajectory(tmp_path / "rom.etraj")
    reference, _ = artifacts.read_trajectory(pipeline_dir / "rom.etraj")
    assert traj.fingerprint == reference.fingerprint


def test_rom_without_rules_or_registry(pipeline_dir, tmp_path):
    """Test exit code 2 when no rules are given and none are registered"""
    code = run("rom", pipeline_dir / "basis.ebasis", "--out", tmp_path, "--registry", tmp_path / "r.db")
    assert code == 2


def test_unregistered_input_is_reported(pipeline_dir, tmp_path, caplog):
    """Test that a stage warns about inputs missing from its registry"""
    code = run("hyperreduce", pipeline_dir / "basis.ebasis", "--out", tmp_path, "--registry", tmp_path / "r.db")
    assert code == 0
    assert "not in the artifact registry" in caplog.text
    assert ArtifactRegistry(tmp_path / "r.db").derived_from(
        artifacts.read_basis(pipeline_dir / "basis.ebasis")[0].fingerprint
    ), "Rules written from an unregistered basis are still registered"
