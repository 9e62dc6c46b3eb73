"""Audit trail for RoadNet runs - SQLite with one audit_logs table.

Only operational metadata lives here (what ran, how long, whether it
succeeded). Experiment results are written to CSV/JSON run directories.
"""

import json
import sqlite3
import uuid
from datetime import datetime, timezone
from pathlib import Path
from typing import List, Optional


class RunAuditLog:
    """SQLite-backed audit log of harness and CLI actions."""

    def __init__(self, db_path: str = "data/roadnet_audit.db"):
        """Initialize the audit log.

        Args:
            db_path: Path to the SQLite database file (":memory:" for tests)
        """
        self.db_path = db_path
        if db_path != ":memory:":
            Path(db_path).parent.mkdir(parents=True, exist_ok=True)
        self.conn: Optional[sqlite3.Connection] = None

    def connect(self) -> None:
        """Connect to the database and create the table."""
        self.conn = sqlite3.connect(self.db_path, check_same_thread=False)
        self.conn.row_factory = sqlite3.Row
        self._create_tables()

    def _create_tables(self) -> None:
        cursor = self.conn.cursor()
        cursor.execute("""
            CREATE TABLE IF NOT EXISTS audit_logs (
                id TEXT PRIMARY KEY,
                timestamp TEXT NOT NULL,
                run_id TEXT,
                component TEXT NOT NULL,
                action TEXT NOT NULL,
                input_summary TEXT,
                output_summary TEXT,
                duration_ms INTEGER DEFAULT 0,
                success INTEGER DEFAULT 1,
                error_message TEXT,
                metadata TEXT,
                created_at TEXT DEFAULT CURRENT_TIMESTAMP
            )
        """)
        self.conn.commit()

    def log_action(
        self,
        component: str,
        action: str,
        input_summary: str = "",
        output_summary: str = "",
        duration_ms: int = 0,
        success: bool = True,
        error_message: str = None,
        run_id: str = None,
        metadata: dict = None,
    ) -> str:
        """Record one action.

        Args:
            component: Module or stage performing the action
            action: Short action name
            input_summary: Summary of the inputs (truncated to 200 chars)
            output_summary: Summary of the outputs
            duration_ms: Wall time in milliseconds
            success: Whether the action succeeded
            error_message: Error text if it failed
            run_id: Run identifier (config hash)
            metadata: Extra JSON-serializable details

        Returns:
            The generated log ID
        """
        log_id = str(uuid.uuid4())
        timestamp = datetime.now(timezone.utc).isoformat()

        cursor = self.conn.cursor()
        cursor.execute("""
            INSERT INTO audit_logs (
                id, timestamp, run_id, component, action,
                input_summary, output_summary, duration_ms,
                success, error_message, metadata
            ) VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
        """, (
            log_id,
            timestamp,
            run_id,
            component,
            action,
            input_summary[:200] if input_summary else None,
            output_summary,
            duration_ms,
            1 if success else 0,
            error_message,
            json.dumps(metadata, sort_keys=True) if metadata else None,
        ))
        self.conn.commit()
        return log_id

    def get_recent_logs(self, limit: int = 100, run_id: str = None) -> List[dict]:
        """Get recent audit rows, newest first.

        Args:
            limit: Maximum number of rows
            run_id: Optional run filter
        """
        cursor = self.conn.cursor()
        if run_id:
            cursor.execute("""
                SELECT * FROM audit_logs
                WHERE run_id = ?
                ORDER BY timestamp DESC
                LIMIT ?
            """, (run_id, limit))
        else:
            cursor.execute("""
                SELECT * FROM audit_logs
                ORDER BY timestamp DESC
                LIMIT ?
            """, (limit,))
        return [dict(row) for row in cursor.fetchall()]

    def close(self) -> None:
        """Close the database connection."""
        if self.conn:
            self.conn.close()
            self.conn = None


_audit_instance: Optional[RunAuditLog] = None


def get_audit_log(db_path: str = None) -> RunAuditLog:
    """Get or create the audit log instance.

    Args:
        db_path: Database path; defaults to the configured audit_db_path
    """
    global _audit_instance
    if _audit_instance is None:
        if db_path is None:
            from road_settings import get_settings
            db_path = get_settings().audit_db_path
        _audit_instance = RunAuditLog(db_path)
        _audit_instance.connect()
    return _audit_instance


def set_audit_log(audit: Optional[RunAuditLog]) -> None:
    """Replace the audit log singleton (tests pass an in-memory log or None)."""
    global _audit_instance
    if _audit_instance is not None and _audit_instance is not audit:
        _audit_instance.close()
    _audit_instance = audit
