"""Multi-cloud share storage: backend abstraction, index, fan-out proxy."""

from .backends import (
    BackendError,
    CloudBackendDescriptor,
    InMemoryBackend,
    LatencyMockBackend,
    LocalDirectoryBackend,
    ObjectMissing,
    build_backend,
)
from .proxy import (
    DuplicateCloud,
    FileNotFound,
    IndexEntry,
    InsufficientLiveShares,
    MultiCloudProxy,
    UploadFailed,
)

__all__ = [
    "BackendError",
    "CloudBackendDescriptor",
    "DuplicateCloud",
    "FileNotFound",
    "IndexEntry",
    "InMemoryBackend",
    "InsufficientLiveShares",
    "LatencyMockBackend",
    "LocalDirectoryBackend",
    "MultiCloudProxy",
    "ObjectMissing",
    "UploadFailed",
    "build_backend",
]
