"""Pluggable storage backends standing in for external cloud services.

Anything implementing put/get/delete/health can be registered with the
multi-cloud proxy; the bundled kinds are in-memory, local-directory, and a
latency/failure mock used for fault-injection tests.
"""

from __future__ import annotations

import os
import random
import threading
import time
from dataclasses import dataclass, field

__all__ = [
    "CloudBackendDescriptor",
    "BackendError",
    "ObjectMissing",
    "InMemoryBackend",
    "LocalDirectoryBackend",
    "LatencyMockBackend",
    "build_backend",
]


class BackendError(RuntimeError):
    """Backend I/O failed (simulated or real)."""


class ObjectMissing(KeyError):
    """Requested object key does not exist at the backend."""


@dataclass(frozen=True)
class CloudBackendDescriptor:
    cloud_id: str
    kind: str                      # "in-memory" | "local-directory" | "latency-mock"
    display_name: str = ""
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind == "latency-mock":
            rate = float(self.config.get("failure_rate", 0.0))
            if not 0.0 <= rate <= 1.0:
                raise ValueError("failure rate must be within [0, 1]")


class InMemoryBackend:
    def __init__(self):
        self._objects: dict[str, bytes] = {}
        self._lock = threading.Lock()

    def put(self, key: str, data: bytes) -> None:
        with self._lock:
            self._objects[key] = bytes(data)

    def get(self, key: str) -> bytes:
        with self._lock:
            try:
                return self._objects[key]
            except KeyError:
                raise ObjectMissing(key) from None

    def delete(self, key: str) -> None:
        with self._lock:
            if self._objects.pop(key, None) is None:
                raise ObjectMissing(key)

    def health(self) -> bool:
        return True

    def keys(self) -> list[str]:
        with self._lock:
            return sorted(self._objects)


class LocalDirectoryBackend:
    """Objects laid out as files under a root; '/' in keys maps to subdirs."""

    def __init__(self, root: str):
        self.root = root
        os.makedirs(root, exist_ok=True)

    def _path(self, key: str) -> str:
        safe = key.replace("..", "_")
        return os.path.join(self.root, *safe.split("/"))

    def put(self, key: str, data: bytes) -> None:
        path = self._path(key)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        tmp = path + ".tmp"
        with open(tmp, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)

    def get(self, key: str) -> bytes:
        try:
            with open(self._path(key), "rb") as fh:
                return fh.read()
        except FileNotFoundError:
            raise ObjectMissing(key) from None

    def delete(self, key: str) -> None:
        try:
            os.remove(self._path(key))
        except FileNotFoundError:
            raise ObjectMissing(key) from None

    def health(self) -> bool:
        return os.path.isdir(self.root)

    def keys(self) -> list[str]:
        out = []
        for dirpath, _dirs, files in os.walk(self.root):
            for name in files:
                rel = os.path.relpath(os.path.join(dirpath, name), self.root)
                out.append(rel.replace(os.sep, "/"))
        return sorted(out)


class LatencyMockBackend:
    """Wraps an in-memory store with configurable delay and failure rate."""

    def __init__(self, delay_ms: float = 0.0, failure_rate: float = 0.0, seed=None):
        if not 0.0 <= failure_rate <= 1.0:
            raise ValueError("failure rate must be within [0, 1]")
        self.delay_ms = delay_ms
        self.failure_rate = failure_rate
        self.down = False
        self._inner = InMemoryBackend()
        self._rng = random.Random(seed)

    def _maybe_fail(self, op: str):
        if self.delay_ms:
            time.sleep(self.delay_ms / 1000.0)
        if self.down or self._rng.random() < self.failure_rate:
            raise BackendError(f"simulated {op} failure")

    def put(self, key: str, data: bytes) -> None:
        self._maybe_fail("put")
        self._inner.put(key, data)

    def get(self, key: str) -> bytes:
        self._maybe_fail("get")
        return self._inner.get(key)

    def delete(self, key: str) -> None:
        self._maybe_fail("delete")
        self._inner.delete(key)

    def health(self) -> bool:
        return not self.down and self.failure_rate < 1.0

    def keys(self) -> list[str]:
        return self._inner.keys()


def build_backend(desc: CloudBackendDescriptor):
    if desc.kind == "in-memory":
        return InMemoryBackend()
    if desc.kind == "local-directory":
        return LocalDirectoryBackend(desc.config["root"])
    if desc.kind == "latency-mock":
        return LatencyMockBackend(
            delay_ms=float(desc.config.get("delay_ms", 0.0)),
            failure_rate=float(desc.config.get("failure_rate", 0.0)),
            seed=desc.config.get("seed"),
        )
    raise ValueError(f"unsupported backend kind: {desc.kind}")
