"""
Tests for the SQLite artifact registry
"""

import sqlite3

from esrom.database import ArtifactRegistry


def test_register_and_lookup(tmp_path):
    """Test registering an artifact and finding it by fingerprint"""
    registry = ArtifactRegistry(tmp_path / "registry.db")
    registry.register(tmp_path / "basis.ebasis", "basis", "b" * 64, ["s" * 64])

    rows = registry.lookup("b" * 64)
    assert len(rows) == 1
    assert rows[0]["kind"] == "basis"
    assert rows[0]["inputs"] == ["s" * 64]
    assert rows[0]["path"].endswith("basis.ebasis")
    assert registry.has_artifact("b" * 64)
    assert not registry.has_artifact("x" * 64)


def test_reregistering_does_not_duplicate(tmp_path):
    """Test that the same path and fingerprint are stored once"""
    db = tmp_path / "registry.db"
    registry = ArtifactRegistry(db)
    for _ in range(3):
        registry.register(tmp_path / "snapshots.esnap", "snapshots", "s" * 64)
    conn = sqlite3.connect(str(db))
    count = conn.execute("SELECT COUNT(*) FROM artifacts").fetchone()[0]
    conn.close()
    assert count == 1


def test_derived_from(tmp_path):
    """Test following provenance downstream"""
    registry = ArtifactRegistry(tmp_path / "registry.db")
    registry.register(tmp_path / "snapshots.esnap", "snapshots", "s" * 64)
    registry.register(tmp_path / "basis.ebasis", "basis", "b" * 64, ["s" * 64])
    registry.register(tmp_path / "rule_volume.ecuba", "rule", "r" * 64, ["b" * 64])

    children = registry.derived_from("b" * 64)
    assert [c["kind"] for c in children] == ["rule"]
    assert registry.derived_from("r" * 64) == []


def test_registry_persists(tmp_path):
    """Test that a second registry object sees earlier entries"""
    db = tmp_path / "nested" / "registry.db"
    ArtifactRegistry(db).register(tmp_path / "rom.eromb", "bundle", "u" * 64)
    assert ArtifactRegistry(db).has_artifact("u" * 64)
