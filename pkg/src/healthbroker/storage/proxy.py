"""Multi-cloud proxy: fans shares out to registered backends and reassembles.

Uploads are all-or-nothing: a failed backend write rolls back every object
already stored and leaves no index rows, so a file is either fully indexed
or absent.  Retrieval fetches shares concurrently and stops at the first
``threshold`` successes.
"""

from __future__ import annotations

import threading
import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass

from ..db import Database
from ..sharing import Share, combine
from .backends import BackendError, CloudBackendDescriptor, ObjectMissing, build_backend

__all__ = [
    "IndexEntry",
    "MultiCloudProxy",
    "FileNotFound",
    "InsufficientLiveShares",
    "DuplicateCloud",
    "UploadFailed",
]


class FileNotFound(KeyError):
    pass


class InsufficientLiveShares(RuntimeError):
    """Fewer than threshold backends holding this file are reachable."""


class DuplicateCloud(ValueError):
    pass


class UploadFailed(RuntimeError):
    """A backend write failed; the whole upload was rolled back."""


@dataclass(frozen=True)
class IndexEntry:
    file_id: str
    share_id: int
    cloud_id: str
    object_key: str
    stored_at: float


def _object_key(file_id: str, share_id: int) -> str:
    return f"{file_id}/{share_id}"


class MultiCloudProxy:
    def __init__(self, db: Database):
        self._db = db
        self._backends: dict[str, object] = {}
        self._descriptors: dict[str, CloudBackendDescriptor] = {}
        self._lock = threading.Lock()

    # -- backend registry -------------------------------------------------

    def register_backend(self, desc: CloudBackendDescriptor, backend=None) -> str:
        with self._lock:
            if desc.cloud_id in self._backends:
                raise DuplicateCloud(f"cloud id already registered: {desc.cloud_id}")
            self._backends[desc.cloud_id] = backend or build_backend(desc)
            self._descriptors[desc.cloud_id] = desc
        return desc.cloud_id

    def backend(self, cloud_id: str):
        try:
            return self._backends[cloud_id]
        except KeyError:
            raise KeyError(f"unknown cloud id: {cloud_id}") from None

    def backends(self) -> list[CloudBackendDescriptor]:
        return list(self._descriptors.values())

    def health(self) -> dict[str, bool]:
        out = {}
        for cid, be in self._backends.items():
            try:
                out[cid] = bool(be.health())
            except Exception:
                out[cid] = False
        return out

    # -- upload / retrieve / delete ---------------------------------------

    def upload_shares(
        self, file_id: str, shares: list[Share], cloud_ids: list[str]
    ) -> list[IndexEntry]:
        if len(shares) != len(cloud_ids):
            raise ValueError("need exactly one cloud per share")
        if len(set(cloud_ids)) != len(cloud_ids):
            raise DuplicateCloud("one share per cloud: cloud ids must be distinct")
        for cid in cloud_ids:
            self.backend(cid)  # raises on unknown
        stored: list[tuple[str, str]] = []
        entries: list[IndexEntry] = []
        now = time.time()
        try:
            for share, cid in zip(shares, cloud_ids):
                key = _object_key(file_id, share.share_id)
                self.backend(cid).put(key, share.to_bytes())
                stored.append((cid, key))
                entries.append(IndexEntry(file_id, share.share_id, cid, key, now))
        except (BackendError, OSError) as exc:
            for cid, key in stored:
                try:
                    self.backend(cid).delete(key)
                except Exception:
                    pass
            raise UploadFailed(f"backend write failed, upload rolled back: {exc}") from exc
        with self._db.transaction() as cur:
            cur.executemany(
                "INSERT INTO index_entries (file_id, share_id, cloud_id, object_key, stored_at)"
                " VALUES (?, ?, ?, ?, ?)",
                [(e.file_id, e.share_id, e.cloud_id, e.object_key, e.stored_at) for e in entries],
            )
        return entries

    def index_for(self, file_id: str) -> list[IndexEntry]:
        rows = self._db.query(
            "SELECT * FROM index_entries WHERE file_id = ? ORDER BY share_id", (file_id,)
        )
        return [
            IndexEntry(r["file_id"], r["share_id"], r["cloud_id"], r["object_key"], r["stored_at"])
            for r in rows
        ]

    def retrieve_file(self, file_id: str, threshold: int) -> bytes:
        entries = self.index_for(file_id)
        if not entries:
            raise FileNotFound(file_id)

        def fetch(entry: IndexEntry) -> Share:
            raw = self.backend(entry.cloud_id).get(entry.object_key)
            return Share.from_bytes(raw)

        shares: list[Share] = []
        with ThreadPoolExecutor(max_workers=min(8, len(entries))) as pool:
            pending = {pool.submit(fetch, e) for e in entries}
            while pending and len(shares) < threshold:
                done, pending = wait(pending, return_when=FIRST_COMPLETED)
                for fut in done:
                    try:
                        shares.append(fut.result())
                    except (BackendError, ObjectMissing, OSError):
                        continue
                    if len(shares) >= threshold:
                        break
            for fut in pending:
                fut.cancel()
        if len(shares) < threshold:
            raise InsufficientLiveShares(
                f"only {len(shares)} of {threshold} required shares reachable"
            )
        return combine(shares[:threshold], threshold)

    def delete_file(self, file_id: str) -> int:
        entries = self.index_for(file_id)
        if not entries:
            raise FileNotFound(file_id)
        removed = 0
        orphaned: list[IndexEntry] = []
        for entry in entries:
            try:
                self.backend(entry.cloud_id).delete(entry.object_key)
                removed += 1
            except (BackendError, ObjectMissing, OSError, KeyError):
                orphaned.append(entry)
        now = time.time()
        with self._db.transaction() as cur:
            cur.execute("DELETE FROM index_entries WHERE file_id = ?", (file_id,))
            cur.executemany(
                "INSERT INTO orphans (file_id, share_id, cloud_id, object_key, recorded_at)"
                " VALUES (?, ?, ?, ?, ?)",
                [(e.file_id, e.share_id, e.cloud_id, e.object_key, now) for e in orphaned],
            )
        return removed

    def orphans(self) -> list[dict]:
        return self._db.query("SELECT * FROM orphans ORDER BY recorded_at")
