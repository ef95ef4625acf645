"""
Artifact registry for esrom.

This module records every artifact the pipeline writes (path, kind,
fingerprint and the fingerprints it was derived from) in a small SQLite
database, so stages can look up their inputs by provenance.
"""

import json
import sqlite3
from pathlib import Path
from typing import List, Optional


class ArtifactRegistry:
    """Manages the SQLite artifact registry

    Args:
        db_path: Database file; defaults to ~/.esrom/registry.db
    """

    def __init__(self, db_path: Optional[Path] = None):
        """Initialize the registry database"""
        self.db_path = Path(db_path) if db_path else Path.home() / ".esrom" / "registry.db"
        self.db_path.parent.mkdir(parents=True, exist_ok=True)
        self._init_database()

    def _init_database(self):
        """Create the artifacts table if needed"""
        conn = sqlite3.connect(str(self.db_path))
        cursor = conn.cursor()
        cursor.execute(
            """
            CREATE TABLE IF NOT EXISTS artifacts (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                path TEXT NOT NULL,
                kind TEXT NOT NULL,
                fingerprint TEXT NOT NULL,
                inputs TEXT,
                created DATETIME DEFAULT CURRENT_TIMESTAMP,
                UNIQUE(path, fingerprint)
            )
        """
        )
        conn.commit()
        conn.close()

    def register(self, path, kind: str, fingerprint: str, inputs: Optional[List[str]] = None):
        """Record an artifact (re-registering the same path and fingerprint refreshes it)

        Args:
            path: Artifact file
            kind: "snapshots", "basis", "rule", "bundle" or "trajectory"
            fingerprint: Fingerprint stored in the artifact
            inputs: Fingerprints of the artifacts it was derived from
        """
        conn = sqlite3.connect(str(self.db_path))
        cursor = conn.cursor()
        cursor.execute(
            """
            INSERT OR REPLACE INTO artifacts (path, kind, fingerprint, inputs, created)
            VALUES (?, ?, ?, ?, CURRENT_TIMESTAMP)
        """,
            (str(Path(path).resolve()), kind, fingerprint, json.dumps(list(inputs or []))),
        )
        conn.commit()
        conn.close()

    def lookup(self, fingerprint: str) -> List[dict]:
        """All registered artifacts carrying this fingerprint, newest first"""
        conn = sqlite3.connect(str(self.db_path))
        cursor = conn.cursor()
        cursor.execute(
            "SELECT path, kind, fingerprint, inputs, created FROM artifacts "
            "WHERE fingerprint = ? ORDER BY id DESC",
            (fingerprint,),
        )
        rows = cursor.fetchall()
        conn.close()
        return [
            {"path": r[0], "kind": r[1], "fingerprint": r[2], "inputs": json.loads(r[3] or "[]"), "created": r[4]}
            for r in rows
        ]

    def has_artifact(self, fingerprint: str) -> bool:
        """Check whether any artifact with this fingerprint was registered"""
        conn = sqlite3.connect(str(self.db_path))
        cursor = conn.cursor()
        cursor.execute("SELECT COUNT(*) FROM artifacts WHERE fingerprint = ?", (fingerprint,))
        count = cursor.fetchone()[0]
        conn.close()
        return count > 0

    def derived_from(self, fingerprint: str) -> List[dict]:
        """Artifacts whose inputs include this fingerprint"""
        conn = sqlite3.connect(str(self.db_path))
        cursor = conn.cursor()
        cursor.execute("SELECT path, kind, fingerprint, inputs, created FROM artifacts ORDER BY id")
        rows = cursor.fetchall()
        conn.close()
        out = []
        for r in rows:
            inputs = json.loads(r[3] or "[]")
            if fingerprint in inputs:
                out.append({"path": r[0], "kind": r[1], "fingerprint": r[2], "inputs": inputs, "created": r[4]})
        return out
