"""Authentication, policy storage/enforcement, and mediated revocation.

Revocation is identity-based and enforced here, in front of any storage
access; the attribute-crypto layer is never touched by a revoke, which is
what makes revocation immediate.  Denial is the default for every unknown
or error case.
"""

from __future__ import annotations

import hashlib
import json
import secrets
import time
import uuid
from dataclasses import dataclass

from .abe.policy import PolicyTree, parse_policy, policy_to_text, satisfies
from .db import Database

__all__ = [
    "AccessControl",
    "AccessDecision",
    "Session",
    "PolicyRecord",
    "BadCredentials",
    "AccountLocked",
    "NotOwner",
    "UnknownFile",
    "SessionInvalid",
    "DuplicateUsername",
]

USER_KINDS = ("patient", "data-provider", "data-requestor", "hospital")


class BadCredentials(Exception):
    """Wrong username or password; the two cases are indistinguishable."""


class AccountLocked(Exception):
    pass


class NotOwner(PermissionError):
    pass


class UnknownFile(KeyError):
    pass


class SessionInvalid(Exception):
    pass


class DuplicateUsername(ValueError):
    pass


@dataclass(frozen=True)
class Session:
    token: str
    user_id: str
    broker_id: int
    issued_at: float
    expires_at: float


@dataclass(frozen=True)
class PolicyRecord:
    file_id: str
    owner_id: str
    policy: PolicyTree
    created_at: float
    updated_at: float


@dataclass(frozen=True)
class AccessDecision:
    allowed: bool
    reason: str

    def __bool__(self) -> bool:
        return self.allowed


_SCRYPT_N, _SCRYPT_R, _SCRYPT_P = 2**14, 8, 1


def _hash_password(password: str, salt: bytes | None = None) -> str:
    salt = salt or secrets.token_bytes(16)
    digest = hashlib.scrypt(
        password.encode(), salt=salt, n=_SCRYPT_N, r=_SCRYPT_R, p=_SCRYPT_P
    )
    return f"scrypt${_SCRYPT_N}${_SCRYPT_R}${_SCRYPT_P}${salt.hex()}${digest.hex()}"

def _verify_password(password: str, encoded: str) -> bool:
    try:
        _, n, r, p, salt_hex, digest_hex = encoded.split("$")
        digest = hashlib.scrypt(
            password.encode(), salt=bytes.fromhex(salt_hex), n=int(n), r=int(r), p=int(p)
        )
        return secrets.compare_digest(digest.hex(), digest_hex)
    except Exception:
        return False


class AccessControl:
    def __init__(
        self,
        db: Database,
        *,
        attempt_limit: int = 5,
        lockout_base_seconds: float = 30.0,
        session_ttl: float = 3600.0,
    ):
        self._db = db
        self.attempt_limit = attempt_limit
        self.lockout_base = lockout_base_seconds
        self.session_ttl = session_ttl

    # -- credentials -------------------------------------------------------

    def create_credential(
        self, username: str, password: str, kind: str, attributes, broker_id: int,
        user_id: str | None = None,
    ) -> str:
        if kind not in USER_KINDS:
            raise ValueError(f"unknown user kind: {kind}")
        if self._db.one("SELECT 1 FROM credentials WHERE username = ?", (username,)):
            raise DuplicateUsername(username)
        user_id = user_id or str(uuid.uuid4())
        with self._db.transaction() as cur:
            cur.execute(
                "INSERT INTO credentials (user_id, username, pw_hash, kind, attributes, broker_id)"
                " VALUES (?, ?, ?, ?, ?, ?)",
                (user_id, username, _hash_password(password), kind,
                 json.dumps(sorted(attributes)), broker_id),
            )
        return user_id

    def user(self, user_id: str) -> dict:
        row = self._db.one("SELECT * FROM credentials WHERE user_id = ?", (user_id,))
        if row is None:
            raise KeyError(f"unknown user: {user_id}")
        row["attributes"] = frozenset(json.loads(row["attributes"]))
        row.pop("pw_hash", None)
        return row

    def user_by_name(self, username: str) -> dict | None:
        row = self._db.one("SELECT user_id FROM credentials WHERE username = ?", (username,))
        return self.user(row["user_id"]) if row else None

    # -- authentication ----------------------------------------------------

    def authenticate(self, username: str, password: str) -> Session:
        now = time.time()
        row = self._db.one("SELECT * FROM credentials WHERE username = ?", (username,))
        if row is None:
            # burn comparable time so unknown users are not enumerable
            _verify_password(password, _hash_password("decoy"))
            raise BadCredentials("bad username or password")
        if row["failures"] >= self.attempt_limit and now < row["locked_until"]:
            raise AccountLocked("too many failed attempts; account locked")
        if not _verify_password(password, row["pw_hash"]):
            failures = row["failures"] + 1
            locked_until = row["locked_until"]
            if failures >= self.attempt_limit:
                locked_until = now + self.lockout_base * 2 ** (failures - self.attempt_limit)
            with self._db.transaction() as cur:
                cur.execute(
                    "UPDATE credentials SET failures = ?, locked_until = ? WHERE user_id = ?",
                    (failures, locked_until, row["user_id"]),
                )
            if failures >= self.attempt_limit:
                raise AccountLocked("too many failed attempts; account locked")
            raise BadCredentials("bad username or password")
        # correct password past an elapsed lockout clears the counter
        with self._db.transaction() as cur:
            cur.execute(
                "UPDATE credentials SET failures = 0, locked_until = 0 WHERE user_id = ?",
                (row["user_id"],),
            )
        return self._new_session(row["user_id"], row["broker_id"])

    def _new_session(self, user_id: str, broker_id: int) -> Session:
        now = time.time()
        session = Session(secrets.token_urlsafe(32), user_id, broker_id, now, now + self.session_ttl)
        with self._db.transaction() as cur:
            cur.execute(
                "INSERT INTO sessions (token, user_id, broker_id, issued_at, expires_at)"
                " VALUES (?, ?, ?, ?, ?)",
                (session.token, user_id, broker_id, now, session.expires_at),
            )
        return session

    def session(self, token: str) -> Session:
        row = self._db.one("SELECT * FROM sessions WHERE token = ?", (token,))
        if row is None:
            raise SessionInvalid("unknown session token")
        if time.time() > row["expires_at"]:
            raise SessionInvalid("session expired")
        return Session(row["token"], row["user_id"], row["broker_id"],
                       row["issued_at"], row["expires_at"])

    def end_session(self, token: str) -> None:
        with self._db.transaction() as cur:
            cur.execute("DELETE FROM sessions WHERE token = ?", (token,))

    # -- policies ----------------------------------------------------------

    def store_policy(self, owner_id: str, file_id: str, policy: PolicyTree) -> PolicyRecord:
        now = time.time()
        existing = self._db.one("SELECT * FROM policies WHERE file_id = ?", (file_id,))
        with self._db.transaction() as cur:
            if existing is not None:
                if existing["owner_id"] != owner_id:
                    raise NotOwner("only the owner may update the policy")
                cur.execute(
                    "INSERT INTO policy_history (file_id, policy_text, replaced_at) VALUES (?, ?, ?)",
                    (file_id, existing["policy_text"], now),
                )
                cur.execute(
                    "UPDATE policies SET policy_text = ?, updated_at = ? WHERE file_id = ?",
                    (policy_to_text(policy), now, file_id),
                )
                created = existing["created_at"]
            else:
                cur.execute(
                    "INSERT INTO policies (file_id, owner_id, policy_text, created_at, updated_at)"
                    " VALUES (?, ?, ?, ?, ?)",
                    (file_id, owner_id, policy_to_text(policy), now, now),
                )
                created = now
        return PolicyRecord(file_id, owner_id, policy, created, now)

    def policy_for(self, file_id: str) -> PolicyRecord:
        row = self._db.one("SELECT * FROM policies WHERE file_id = ?", (file_id,))
        if row is None:
            raise UnknownFile(file_id)
        return PolicyRecord(
            row["file_id"], row["owner_id"], parse_policy(row["policy_text"]),
            row["created_at"], row["updated_at"],
        )

    def policy_history(self, file_id: str) -> list[str]:
        """Prior policy texts, oldest first; export format is one per line."""
        rows = self._db.query(
            "SELECT policy_text FROM policy_history WHERE file_id = ? ORDER BY replaced_at",
            (file_id,),
        )
        return [r["policy_text"] for r in rows]

    def drop_policy(self, owner_id: str, file_id: str) -> None:
        rec = self.policy_for(file_id)
        if rec.owner_id != owner_id:
            raise NotOwner("only the owner may remove the policy")
        with self._db.transaction() as cur:
            cur.execute("DELETE FROM policies WHERE file_id = ?", (file_id,))

    # -- revocation --------------------------------------------------------

    def _require_file_owner(self, actor_id: str, file_id: str) -> None:
        if self.policy_for(file_id).owner_id != actor_id:
            raise NotOwner("only the file owner may change revocation state")

    def revoke_user(self, actor_id: str, target_user_id: str, *, file_id: str | None = None) -> None:
        with self._db.transaction() as cur:
            if file_id is not None:
                self._require_file_owner(actor_id, file_id)
                cur.execute(
                    "INSERT OR IGNORE INTO revoked_file (file_id, user_id) VALUES (?, ?)",
                    (file_id, target_user_id),
                )
            else:
                cur.execute(
                    "INSERT OR IGNORE INTO revoked_global (patient_id, user_id) VALUES (?, ?)",
                    (actor_id, target_user_id),
                )

    def unrevoke_user(self, actor_id: str, target_user_id: str, *, file_id: str | None = None) -> None:
        with self._db.transaction() as cur:
            if file_id is not None:
                self._require_file_owner(actor_id, file_id)
                cur.execute(
                    "DELETE FROM revoked_file WHERE file_id = ? AND user_id = ?",
                    (file_id, target_user_id),
                )
            else:
                cur.execute(
                    "DELETE FROM revoked_global WHERE patient_id = ? AND user_id = ?",
                    (actor_id, target_user_id),
                )

    def revoke_attribute(self, actor_id: str, attribute: str, *, file_id: str | None = None) -> None:
        if file_id is not None:
            self._require_file_owner(actor_id, file_id)
        with self._db.transaction() as cur:
            cur.execute(
                "INSERT OR IGNORE INTO revoked_attr (patient_id, attribute, file_id) VALUES (?, ?, ?)",
                (actor_id, attribute.casefold(), file_id or ""),
            )

    def unrevoke_attribute(self, actor_id: str, attribute: str, *, file_id: str | None = None) -> None:
        with self._db.transaction() as cur:
            cur.execute(
                "DELETE FROM revoked_attr WHERE patient_id = ? AND attribute = ? AND file_id = ?",
                (actor_id, attribute.casefold(), file_id or ""),
            )

    # -- enforcement -------------------------------------------------------

    def check_access(self, requestor_id: str, file_id: str) -> AccessDecision:
        """Deny-by-default mediation: revocation lists first, then the policy."""
        try:
            record = self.policy_for(file_id)
        except UnknownFile:
            raise
        try:
            requestor = self.user(requestor_id)
        except KeyError:
            return AccessDecision(False, "unknown requestor")
        owner_id = record.owner_id
        if self._db.one(
            "SELECT 1 FROM revoked_global WHERE patient_id = ? AND user_id = ?",
            (owner_id, requestor_id),
        ):
            return AccessDecision(False, "revoked:global")
        if self._db.one(
            "SELECT 1 FROM revoked_file WHERE file_id = ? AND user_id = ?",
            (file_id, requestor_id),
        ):
            return AccessDecision(False, "revoked:file")
        attrs = requestor["attributes"]
        hits = self._db.query(
            "SELECT attribute, file_id FROM revoked_attr WHERE patient_id = ?", (owner_id,)
        )
        for hit in hits:
            if hit["attribute"] in attrs and hit["file_id"] in ("", file_id):
                return AccessDecision(False, f"revoked:attribute:{hit['attribute']}")
        try:
            if satisfies(record.policy, attrs):
                return AccessDecision(True, "policy-satisfied")
        except Exception:
            return AccessDecision(False, "policy-evaluation-error")
        return AccessDecision(False, "policy-not-satisfied")
