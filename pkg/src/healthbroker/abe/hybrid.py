"""Hybrid document encryption: attribute-encrypted DEK + AES-256-GCM body.

Only the fixed-size data-encryption key goes through the attribute layer,
so attribute-side work depends on the policy, not the document size.

Wire format (versioned, stable for stored documents)::

    magic "HABD" | version u8 | doc_id (16 bytes)
    | policy text   (u16 len + utf-8)
    | wrapped DEK   (u32 len + AbeCiphertext bytes)
    | emergency DEK (u32 len + AbeCiphertext bytes; len 0 when absent)
    | nonce (12 bytes) | GCM ciphertext+tag (rest)
"""

from __future__ import annotations

import hashlib
import secrets
import struct
import uuid
from dataclasses import dataclass

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from .cpabe import (
    AbeCiphertext,
    NotSatisfied,
    PublicParams,
    UserKey,
    decrypt_element,
    encrypt_element,
    random_gt_element,
)
from .policy import Leaf, PolicyTree, parse_policy, policy_to_text

__all__ = [
    "EncryptedDocument",
    "IntegrityFailure",
    "EMERGENCY_ATTRIBUTE",
    "encrypt",
    "decrypt",
    "decrypt_emergency",
]

EMERGENCY_ATTRIBUTE = "emergency_room"

_MAGIC = b"HABD"
_VERSION = 1


class IntegrityFailure(Exception):
    """Authenticated body failed verification."""


@dataclass(frozen=True)
class EncryptedDocument:
    doc_id: str
    policy_text: str
    wrapped_dek: AbeCiphertext
    emergency_dek: AbeCiphertext | None
    nonce: bytes
    body: bytes

    @property
    def policy(self) -> PolicyTree:
        return parse_policy(self.policy_text)

    def to_bytes(self) -> bytes:
        ptext = self.policy_text.encode()
        wrapped = self.wrapped_dek.to_bytes()
        emergency = self.emergency_dek.to_bytes() if self.emergency_dek else b""
        return b"".join(
            [
                _MAGIC,
                bytes([_VERSION]),
                uuid.UUID(self.doc_id).bytes,
                struct.pack(">H", len(ptext)),
                ptext,
                struct.pack(">I", len(wrapped)),
                wrapped,
                struct.pack(">I", len(emergency)),
                emergency,
                self.nonce,
                self.body,
            ]
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "EncryptedDocument":
        if data[:4] != _MAGIC:
            raise ValueError("bad document magic")
        if data[4] != _VERSION:
            raise ValueError(f"unsupported document version {data[4]}")
        off = 5
        doc_id = str(uuid.UUID(bytes=data[off : off + 16]))
        off += 16
        (plen,) = struct.unpack(">H", data[off : off + 2])
        off += 2
        policy_text = data[off : off + plen].decode()
        off += plen
        (wlen,) = struct.unpack(">I", data[off : off + 4])
        off += 4
        wrapped = AbeCiphertext.from_bytes(data[off : off + wlen])
        off += wlen
        (elen,) = struct.unpack(">I", data[off : off + 4])
        off += 4
        emergency = AbeCiphertext.from_bytes(data[off : off + elen]) if elen else None
        off += elen
        nonce = data[off : off + 12]
        off += 12
        return cls(doc_id, policy_text, wrapped, emergency, nonce, data[off:])


def _derive_dek(pp: PublicParams, element) -> bytes:
    return hashlib.sha256(b"dek" + pp.group.gt_to_bytes(element)).digest()


def encrypt(
    pp: PublicParams,
    policy: PolicyTree,
    plaintext: bytes,
    *,
    emergency_access: bool = True,
    rng=None,
    doc_id: str | None = None,
) -> EncryptedDocument:
    """Encrypt a document under a policy; DEK and nonce are fresh per call."""
    if not plaintext:
        raise ValueError("plaintext must be non-empty")
    element = random_gt_element(pp, rng)
    dek = _derive_dek(pp, element)
    wrapped = encrypt_element(pp, policy, element, rng)
    emergency = (
        encrypt_element(pp, Leaf(EMERGENCY_ATTRIBUTE), element, rng)
        if emergency_access
        else None
    )
    nonce = rng.token_bytes(12) if rng else secrets.token_bytes(12)
    body = AESGCM(dek).encrypt(nonce, plaintext, None)
    return EncryptedDocument(
        doc_id or str(uuid.uuid4()),
        policy_to_text(policy),
        wrapped,
        emergency,
        nonce,
        body,
    )


def _open_body(pp: PublicParams, element, doc: EncryptedDocument) -> bytes:
    dek = _derive_dek(pp, element)
    try:
        return AESGCM(dek).decrypt(doc.nonce, doc.body, None)
    except InvalidTag as exc:
        raise IntegrityFailure("document body failed authentication") from exc


def decrypt(pp: PublicParams, key: UserKey, doc: EncryptedDocument) -> bytes:
    """Plaintext iff the key satisfies the document policy; body authenticated."""
    element = decrypt_element(pp, key, doc.wrapped_dek)
    return _open_body(pp, element, doc)


def decrypt_emergency(pp: PublicParams, key: UserKey, doc: EncryptedDocument) -> bytes:
    """Break-glass path: open via the emergency wrap, if the patient allowed one."""
    if doc.emergency_dek is None:
        raise NotSatisfied("document has no emergency wrap")
    element = decrypt_element(pp, key, doc.emergency_dek)
    return _open_body(pp, element, doc)
