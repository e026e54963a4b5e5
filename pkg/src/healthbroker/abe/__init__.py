"""Attribute-based crypto: policy language, CP-ABE, and hybrid documents."""

from .cpabe import (
    AbeCiphertext,
    DeterministicRng,
    MasterSecret,
    NotSatisfied,
    PublicParams,
    UserKey,
    keygen,
    setup,
)
from .hybrid import (
    EMERGENCY_ATTRIBUTE,
    EncryptedDocument,
    IntegrityFailure,
    decrypt,
    decrypt_emergency,
    encrypt,
)
from .pairing import UnsupportedLevel
from .policy import (
    Leaf,
    PolicySyntaxError,
    PolicyTree,
    Threshold,
    normalize_attributes,
    parse_policy,
    policy_to_text,
    satisfies,
)

__all__ = [
    "AbeCiphertext",
    "DeterministicRng",
    "EMERGENCY_ATTRIBUTE",
    "EncryptedDocument",
    "IntegrityFailure",
    "Leaf",
    "MasterSecret",
    "NotSatisfied",
    "PolicySyntaxError",
    "PolicyTree",
    "PublicParams",
    "Threshold",
    "UnsupportedLevel",
    "UserKey",
    "decrypt",
    "decrypt_emergency",
    "encrypt",
    "keygen",
    "normalize_attributes",
    "parse_policy",
    "policy_to_text",
    "satisfies",
    "setup",
]
