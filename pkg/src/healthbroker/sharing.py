"""Threshold secret sharing of ciphertext bytes over GF(256).

Each byte of the input is a Shamir secret with its own random degree-(T-1)
polynomial; share i holds the evaluations at x = i.  Payload length therefore
equals input length, and any T of the N shares reconstruct exactly.

Share wire format (bit-exact, stored as-is at each cloud backend)::

    magic "HABS" | version u8 | file_id (16 bytes) | share_id u8
    | T u8 | N u8 | payload length u64 big-endian | payload
"""

from __future__ import annotations

import secrets
import struct
import uuid
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Share",
    "InsufficientShares",
    "LabelMismatch",
    "InconsistentParams",
    "DuplicateX",
    "split",
    "combine",
]

_MAGIC = b"HABS"
_VERSION = 1


class InsufficientShares(ValueError):
    """Fewer shares supplied than the threshold requires."""


class LabelMismatch(ValueError):
    """Shares from different files mixed in one reconstruction."""


class InconsistentParams(ValueError):
    """Shares disagree on (T, N) or payload length."""


class DuplicateX(ValueError):
    """Two shares claim the same evaluation point."""


# GF(256) with the AES reduction polynomial x^8+x^4+x^3+x+1
_EXP = np.zeros(512, dtype=np.uint8)
_LOG = np.zeros(256, dtype=np.int32)
# generated by 0x03, a primitive element for this polynomial
_x = 1
for _i in range(255):
    _EXP[_i] = _x
    _LOG[_x] = _i
    _d = _x << 1
    if _d & 0x100:
        _d ^= 0x11B
    _x ^= _d
_EXP[255:510] = _EXP[:255]

# full multiplication table for vectorized payload scaling
_MUL = np.zeros((256, 256), dtype=np.uint8)
for _a in range(1, 256):
    _MUL[_a, 1:] = _EXP[_LOG[_a] + _LOG[1:256]]


def _gf_mul(a: int, b: int) -> int:
    return int(_MUL[a, b])


def _gf_inv(a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("no inverse of 0 in GF(256)")
    return int(_EXP[255 - _LOG[a]])


@dataclass(frozen=True)
class Share:
    file_id: str
    share_id: int            # also the evaluation point x, 1..N
    threshold: int
    total: int
    payload: bytes

    @property
    def x_coordinate(self) -> int:
        return self.share_id

    def to_bytes(self) -> bytes:
        return b"".join(
            [
                _MAGIC,
                bytes([_VERSION]),
                uuid.UUID(self.file_id).bytes,
                bytes([self.share_id, self.threshold, self.total]),
                struct.pack(">Q", len(self.payload)),
                self.payload,
            ]
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "Share":
        if data[:4] != _MAGIC:
            raise ValueError("bad share magic")
        if data[4] != _VERSION:
            raise ValueError(f"unsupported share version {data[4]}")
        file_id = str(uuid.UUID(bytes=data[5:21]))
        share_id, threshold, total = data[21], data[22], data[23]
        (length,) = struct.unpack(">Q", data[24:32])
        payload = data[32 : 32 + length]
        if len(payload) != length:
            raise ValueError("truncated share payload")
        return cls(file_id, share_id, threshold, total, payload)


def split(data: bytes, n: int, t: int, *, file_id: str | None = None) -> list[Share]:
    """Split ``data`` into n shares, any t of which reconstruct it."""
    if not data:
        raise ValueError("cannot split empty data")
    if not 1 <= t <= n:
        raise ValueError(f"threshold t={t} must satisfy 1 <= t <= n={n}")
    if n > 255:
        raise ValueError(f"n={n} exceeds field capacity (255)")
    file_id = file_id or str(uuid.uuid4())
    secret = np.frombuffer(data, dtype=np.uint8)
    coeffs = [
        np.frombuffer(secrets.token_bytes(len(data)), dtype=np.uint8)
        for _ in range(t - 1)
    ]
    shares = []
    for x in range(1, n + 1):
        acc = secret.copy()
        xpow = 1
        for c in coeffs:
            xpow = _gf_mul(xpow, x)
            acc ^= _MUL[xpow][c]
        shares.append(Share(file_id, x, t, n, acc.tobytes()))
    return shares


def combine(shares: list[Share], t: int | None = None) -> bytes:
    """Reconstruct the original bytes from at least t consistent shares."""
    if not shares:
        raise InsufficientShares("no shares supplied")
    first = shares[0]
    t = t if t is not None else first.threshold
    if any(s.file_id != first.file_id for s in shares):
        raise LabelMismatch("shares carry different file ids")
    if any(
        (s.threshold, s.total, len(s.payload))
        != (first.threshold, first.total, len(first.payload))
        for s in shares
    ):
        raise InconsistentParams("shares disagree on (T, N) or payload length")
    xs = [s.share_id for s in shares]
    if len(set(xs)) != len(xs):
        raise DuplicateX("duplicate evaluation points")
    if len(shares) < t:
        raise InsufficientShares(f"need {t} shares, got {len(shares)}")
    use = shares[:t]
    result = np.zeros(len(first.payload), dtype=np.uint8)
    for s in use:
        lam = 1
        for other in use:
            if other.share_id == s.share_id:
                continue
            lam = _gf_mul(lam, _gf_mul(other.share_id, _gf_inv(s.share_id ^ other.share_id)))
        result ^= _MUL[lam][np.frombuffer(s.payload, dtype=np.uint8)]
    return result.tobytes()
