"""In-process attribute issuing authority.

Stands in for the per-domain authority that certifies users' attribute
sets.  Grants are Ed25519-signed over a canonical encoding of (username,
attributes); the key-management side verifies a grant before issuing any
decryption key.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from .abe.policy import normalize_attributes

__all__ = ["AttributeGrant", "AttributeAuthority", "InvalidGrant"]


class InvalidGrant(Exception):
    """Grant signature or contents failed verification."""


@dataclass(frozen=True)
class AttributeGrant:
    username: str
    attributes: tuple
    issued_at: float
    signature: bytes

    def signed_payload(self) -> bytes:
        return json.dumps(
            {"username": self.username, "attributes": sorted(self.attributes),
             "issued_at": self.issued_at},
            sort_keys=True, separators=(",", ":"),
        ).encode()

    def to_dict(self) -> dict:
        return {
            "username": self.username,
            "attributes": sorted(self.attributes),
            "issued_at": self.issued_at,
            "signature": self.signature.hex(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AttributeGrant":
        return cls(
            data["username"], tuple(data["attributes"]), float(data["issued_at"]),
            bytes.fromhex(data["signature"]),
        )


class AttributeAuthority:
    def __init__(self, private_key: Ed25519PrivateKey | None = None):
        self._key = private_key or Ed25519PrivateKey.generate()

    @property
    def public_key(self) -> Ed25519PublicKey:
        return self._key.public_key()

    def public_key_bytes(self) -> bytes:
        return self.public_key.public_bytes(
            serialization.Encoding.Raw, serialization.PublicFormat.Raw
        )

    def issue_grant(self, username: str, attributes) -> AttributeGrant:
        attrs = tuple(sorted(normalize_attributes(attributes)))
        unsigned = AttributeGrant(username, attrs, time.time(), b"")
        return AttributeGrant(
            username, attrs, unsigned.issued_at, self._key.sign(unsigned.signed_payload())
        )

    @staticmethod
    def verify_grant(grant: AttributeGrant, public_key: Ed25519PublicKey) -> frozenset[str]:
        try:
            public_key.verify(grant.signature, grant.signed_payload())
        except InvalidSignature as exc:
            raise InvalidGrant("bad grant signature") from exc
        return normalize_attributes(grant.attributes)
