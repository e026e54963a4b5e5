"""Request log and hash-chained action log.

Both logs persist as newline-delimited JSON with sorted keys, so external
tools can re-verify the chain bit-exactly.  Appends are fail-closed by
construction: any storage error propagates to the caller, which must abort
the triggering operation.

Action-log entries are linked by ``entry_hash = sha256(canonical-entry ||
prev_hash)`` where the canonical entry excludes the hash fields; the head
(seq, hash) is stored separately so truncation is detectable.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
import uuid

__all__ = ["GatekeeperLog", "BrokerLog", "canonical", "GENESIS_HASH"]

GENESIS_HASH = "0" * 64


def canonical(entry: dict) -> str:
    """Stable serialization used both for storage and for hashing."""
    return json.dumps(entry, sort_keys=True, separators=(",", ":"))


def entry_hash(entry: dict, prev_hash: str) -> str:
    body = {k: v for k, v in entry.items() if k not in ("entry_hash", "prev_hash")}
    return hashlib.sha256((canonical(body) + prev_hash).encode()).hexdigest()


class _NdjsonLog:
    def __init__(self, path: str | None):
        self.path = path
        self._entries: list[dict] = []
        self._lock = threading.Lock()
        if path and os.path.exists(path):
            with open(path) as fh:
                self._entries = [json.loads(line) for line in fh if line.strip()]

    def _write(self, entry: dict) -> None:
        if self.path:
            with open(self.path, "a") as fh:
                fh.write(canonical(entry) + "\n")
                fh.flush()
                os.fsync(fh.fileno())

    def entries(self, since_seq: int = 0) -> list[dict]:
        with self._lock:
            return [dict(e) for e in self._entries if e["seq"] > since_seq]

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)


class GatekeeperLog(_NdjsonLog):
    """Append-only record of every user request, written before the broker acts."""

    def record(self, user_id: str, kind: str, params: dict | None = None,
               request_id: str | None = None) -> dict:
        with self._lock:
            entry = {
                "seq": len(self._entries) + 1,
                "ts": time.time(),
                "user_id": user_id,
                "kind": kind,
                "request_id": request_id or str(uuid.uuid4()),
                "params": params or {},
            }
            self._write(entry)
            self._entries.append(entry)
            return dict(entry)


class BrokerLog(_NdjsonLog):
    """Hash-chained record of broker-module actions."""

    def __init__(self, path: str | None, broker_id: int = 0):
        super().__init__(path)
        self.broker_id = broker_id
        self._head_path = path + ".head" if path else None
        self._last_hash = self._entries[-1]["entry_hash"] if self._entries else GENESIS_HASH

    def append(self, module: str, action: str, params: dict | None = None,
               request_id: str = "", user_id: str = "",
               broker_id: int | None = None) -> dict:
        with self._lock:
            entry = {
                "seq": len(self._entries) + 1,
                "ts": time.time(),
                "broker_id": self.broker_id if broker_id is None else broker_id,
                "module": module,
                "action": action,
                "user_id": user_id,
                "request_id": request_id,
                "params": params or {},
            }
            entry["prev_hash"] = self._last_hash
            entry["entry_hash"] = entry_hash(entry, self._last_hash)
            self._write(entry)
            if self._head_path:
                tmp = self._head_path + ".tmp"
                with open(tmp, "w") as fh:
                    fh.write(canonical({"seq": entry["seq"], "hash": entry["entry_hash"]}))
                os.replace(tmp, self._head_path)
            self._entries.append(entry)
            self._last_hash = entry["entry_hash"]
            return dict(entry)

    def head(self) -> tuple[int, str]:
        with self._lock:
            if not self._entries:
                return 0, GENESIS_HASH
            last = self._entries[-1]
            return last["seq"], last["entry_hash"]

    def stored_head(self) -> tuple[int, str] | None:
        if not self._head_path or not os.path.exists(self._head_path):
            return None
        with open(self._head_path) as fh:
            data = json.loads(fh.read())
        return data["seq"], data["hash"]

    @staticmethod
    def verify_entries(entries: list[dict], prev_hash: str = GENESIS_HASH):
        """Recompute every link; returns ("intact", None) or ("broken", seq)."""
        for entry in entries:
            if entry.get("prev_hash") != prev_hash:
                return "broken", entry.get("seq")
            if entry.get("entry_hash") != entry_hash(entry, prev_hash):
                return "broken", entry.get("seq")
            prev_hash = entry["entry_hash"]
        return "intact", None

    def verify_chain(self, from_seq: int = 1, to_seq: int | None = None):
        with self._lock:
            entries = list(self._entries)
        if to_seq is None:
            to_seq = len(entries)
        if from_seq < 1 or to_seq > len(entries) or from_seq > to_seq + 1:
            raise ValueError("invalid verification range")
        prev = GENESIS_HASH if from_seq == 1 else entries[from_seq - 2]["entry_hash"]
        return self.verify_entries(entries[from_seq - 1 : to_seq], prev)

    def check_truncation(self) -> bool:
        """True when the stored head pointer matches the last entry."""
        stored = self.stored_head()
        if stored is None:
            return True
        return stored == self.head()
