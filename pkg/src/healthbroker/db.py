"""Embedded relational store shared by the service modules.

A thin wrapper over sqlite3: schema creation, a process-wide write lock,
and dict-shaped rows.  Callers own transaction boundaries via ``transaction``.
"""

from __future__ import annotations

import json
import sqlite3
import threading
from contextlib import contextmanager

__all__ = ["Database"]

_SCHEMA = """
CREATE TABLE IF NOT EXISTS kv (
    key TEXT PRIMARY KEY,
    value BLOB NOT NULL
);
CREATE TABLE IF NOT EXISTS credentials (
    user_id TEXT PRIMARY KEY,
    username TEXT UNIQUE NOT NULL,
    pw_hash TEXT NOT NULL,
    kind TEXT NOT NULL,
    attributes TEXT NOT NULL,
    broker_id INTEGER NOT NULL,
    failures INTEGER NOT NULL DEFAULT 0,
    locked_until REAL NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS sessions (
    token TEXT PRIMARY KEY,
    user_id TEXT NOT NULL,
    broker_id INTEGER NOT NULL,
    issued_at REAL NOT NULL,
    expires_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS policies (
    file_id TEXT PRIMARY KEY,
    owner_id TEXT NOT NULL,
    policy_text TEXT NOT NULL,
    created_at REAL NOT NULL,
    updated_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS policy_history (
    file_id TEXT NOT NULL,
    policy_text TEXT NOT NULL,
    replaced_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS revoked_file (
    file_id TEXT NOT NULL,
    user_id TEXT NOT NULL,
    PRIMARY KEY (file_id, user_id)
);
CREATE TABLE IF NOT EXISTS revoked_global (
    patient_id TEXT NOT NULL,
    user_id TEXT NOT NULL,
    PRIMARY KEY (patient_id, user_id)
);
CREATE TABLE IF NOT EXISTS revoked_attr (
    patient_id TEXT NOT NULL,
    attribute TEXT NOT NULL,
    file_id TEXT,
    PRIMARY KEY (patient_id, attribute, file_id)
);
CREATE TABLE IF NOT EXISTS index_entries (
    file_id TEXT NOT NULL,
    share_id INTEGER NOT NULL,
    cloud_id TEXT NOT NULL,
    object_key TEXT NOT NULL,
    stored_at REAL NOT NULL,
    PRIMARY KEY (file_id, share_id)
);
CREATE TABLE IF NOT EXISTS orphans (
    file_id TEXT NOT NULL,
    share_id INTEGER NOT NULL,
    cloud_id TEXT NOT NULL,
    object_key TEXT NOT NULL,
    recorded_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS reviews (
    review_id TEXT PRIMARY KEY,
    dp_id TEXT NOT NULL,
    patient_id TEXT NOT NULL,
    payload BLOB NOT NULL,
    transport_key BLOB NOT NULL,
    status TEXT NOT NULL,
    submitted_at REAL NOT NULL,
    decided_at REAL,
    target_file_id TEXT
);
CREATE TABLE IF NOT EXISTS files (
    file_id TEXT PRIMARY KEY,
    patient_id TEXT NOT NULL,
    doc_id TEXT NOT NULL,
    storage_id TEXT NOT NULL,
    threshold INTEGER NOT NULL,
    total INTEGER NOT NULL,
    cloud_ids TEXT NOT NULL,
    created_at REAL NOT NULL,
    updated_at REAL NOT NULL,
    version INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS access_requests (
    request_id TEXT PRIMARY KEY,
    requestor_id TEXT NOT NULL,
    patient_id TEXT NOT NULL,
    file_id TEXT NOT NULL,
    reason TEXT NOT NULL,
    created_at REAL NOT NULL,
    status TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS notifications (
    note_id TEXT PRIMARY KEY,
    recipient TEXT NOT NULL,
    kind TEXT NOT NULL,
    body TEXT NOT NULL,
    created_at REAL NOT NULL,
    acked INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS alerts (
    alert_id TEXT PRIMARY KEY,
    rule_id TEXT NOT NULL,
    bl_seq INTEGER,
    gk_seq INTEGER,
    description TEXT NOT NULL,
    severity TEXT NOT NULL,
    recipients TEXT NOT NULL,
    raised_at REAL NOT NULL,
    UNIQUE (rule_id, bl_seq)
);
"""


class Database:
    def __init__(self, path: str = ":memory:"):
        self.path = path
        self._conn = sqlite3.connect(path, check_same_thread=False)
        self._conn.row_factory = sqlite3.Row
        self._lock = threading.RLock()
        with self.transaction() as cur:
            cur.executescript(_SCHEMA)

    @contextmanager
    def transaction(self):
        with self._lock:
            cur = self._conn.cursor()
            try:
                yield cur
                self._conn.commit()
            except BaseException:
                self._conn.rollback()
                raise
            finally:
                cur.close()

    def query(self, sql: str, params=()) -> list[dict]:
        with self._lock:
            cur = self._conn.execute(sql, params)
            rows = [dict(r) for r in cur.fetchall()]
            cur.close()
            return rows

    def one(self, sql: str, params=()) -> dict | None:
        rows = self.query(sql, params)
        return rows[0] if rows else None

    def kv_get(self, key: str) -> bytes | None:
        row = self.one("SELECT value FROM kv WHERE key = ?", (key,))
        return row["value"] if row else None

    def kv_set(self, key: str, value: bytes) -> None:
        with self.transaction() as cur:
            cur.execute(
                "INSERT INTO kv (key, value) VALUES (?, ?) "
                "ON CONFLICT(key) DO UPDATE SET value = excluded.value",
                (key, value),
            )

    def dump_blobs(self) -> list[bytes]:
        """Every stored value, for persistence-scan tests."""
        out = []
        for table in (
            "kv", "credentials", "sessions", "policies", "policy_history",
            "revoked_file", "revoked_global", "revoked_attr", "index_entries",
            "orphans", "reviews", "files", "access_requests", "notifications",
            "alerts",
        ):
            for row in self.query(f"SELECT * FROM {table}"):
                for val in row.values():
                    if isinstance(val, bytes):
                        out.append(val)
                    elif val is not None:
                        out.append(str(val).encode())
        return out

    def close(self):
        self._conn.close()


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))
