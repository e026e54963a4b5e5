"""Workflow orchestration: registration, patient-reviewed upload, retrieval,
emergency access.

Every externally triggered operation records a request-log entry before any
module acts (fail-closed), then emits one action-log entry per module action
so the inspector can cross-match the two streams.  The service never holds
plaintext health data or user private keys: documents arrive already
encrypted by the patient client, and issued keys are returned to the caller
and forgotten.
"""

from __future__ import annotations

import hashlib
import json
import time
import uuid
from dataclasses import dataclass

from .abe import cpabe
from .abe.hybrid import EncryptedDocument
from .abe.policy import parse_policy
from .access import AccessControl, NotOwner, Session
from .aia import AttributeAuthority, AttributeGrant, InvalidGrant
from .audit.logs import BrokerLog, GatekeeperLog
from .db import Database
from .storage.proxy import FileNotFound, MultiCloudProxy

__all__ = [
    "BrokerService",
    "ReviewItem",
    "FileMeta",
    "AccessDenied",
    "NotFound",
    "WorkflowError",
    "partition_for",
]


class AccessDenied(PermissionError):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class NotFound(KeyError):
    pass


class WorkflowError(ValueError):
    pass


def partition_for(user_id: str, broker_count: int) -> int:
    """Stable user -> broker assignment; pure in its inputs."""
    digest = hashlib.sha256(user_id.encode()).digest()
    return int.from_bytes(digest[:8], "big") % broker_count


@dataclass(frozen=True)
class ReviewItem:
    review_id: str
    dp_id: str
    patient_id: str
    payload: bytes
    transport_key: bytes
    status: str
    submitted_at: float
    decided_at: float | None
    target_file_id: str | None

    def to_dict(self, include_payload: bool = True) -> dict:
        out = {
            "review_id": self.review_id,
            "dp_id": self.dp_id,
            "patient_id": self.patient_id,
            "status": self.status,
            "submitted_at": self.submitted_at,
            "decided_at": self.decided_at,
            "target_file_id": self.target_file_id,
        }
        if include_payload:
            out["payload_hex"] = self.payload.hex()
            out["transport_key_hex"] = self.transport_key.hex()
        return out


@dataclass(frozen=True)
class FileMeta:
    file_id: str
    patient_id: str
    doc_id: str
    storage_id: str
    threshold: int
    total: int
    cloud_ids: tuple
    created_at: float
    updated_at: float
    version: int

    def to_dict(self) -> dict:
        return {
            "file_id": self.file_id,
            "patient_id": self.patient_id,
            "doc_id": self.doc_id,
            "threshold": self.threshold,
            "total": self.total,
            "cloud_ids": list(self.cloud_ids),
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "version": self.version,
        }


class BrokerService:
    """One process hosting all logical broker partitions."""

    def __init__(
        self,
        db: Database,
        mcp: MultiCloudProxy,
        ac: AccessControl,
        aia: AttributeAuthority,
        gk: GatekeeperLog,
        bl: BrokerLog,
        *,
        broker_count: int = 1,
        security_level: int = 80,
        test_seed: str | None = None,
    ):
        if broker_count < 1:
            raise ValueError("broker count must be >= 1")
        self.db = db
        self.mcp = mcp
        self.ac = ac
        self.aia = aia
        self.gk = gk
        self.bl = bl
        self.broker_count = broker_count
        self.security_level = security_level
        self._init_abe(test_seed)

    def _init_abe(self, test_seed: str | None):
        stored = self.db.kv_get("abe.public_params")
        if stored is not None:
            self.pp = cpabe.PublicParams.from_bytes(stored)
            self.msk = cpabe.MasterSecret.from_bytes(self.db.kv_get("abe.master_secret"))
            return
        rng = cpabe.DeterministicRng(test_seed) if test_seed is not None else None
        self.pp, self.msk = cpabe.setup(self.security_level, rng)
        self.db.kv_set("abe.public_params", self.pp.to_bytes())
        self.db.kv_set("abe.master_secret", self.msk.to_bytes())

    # -- helpers -----------------------------------------------------------

    def _gate(self, user_id: str, kind: str, params: dict) -> dict:
        """Request-log entry; must succeed before the broker acts."""
        return self.gk.record(user_id, kind, params)

    def _act(self, gk_entry: dict, module: str, action: str, params: dict,
             broker_id: int | None = None) -> dict:
        return self.bl.append(
            module, action, params,
            request_id=gk_entry["request_id"], user_id=gk_entry["user_id"],
            broker_id=broker_id,
        )

    def _session(self, token: str) -> Session:
        return self.ac.session(token)

    def public_params_bytes(self) -> bytes:
        return self.pp.to_bytes()

    # -- registration and login --------------------------------------------

    def register_user(self, username: str, password: str, kind: str,
                      grant: AttributeGrant) -> dict:
        """Create a credential and issue the user's decryption key.

        The key is returned to the caller and retained nowhere server-side.
        """
        gk_entry = self._gate("", "register", {"username": username, "kind": kind})
        if grant.username != username:
            raise InvalidGrant("grant was issued for a different username")
        attrs = AttributeAuthority.verify_grant(grant, self.aia.public_key)
        user_id = str(uuid.uuid4())
        broker_id = partition_for(user_id, self.broker_count)
        self.ac.create_credential(username, password, kind, attrs, broker_id, user_id)
        user_key = cpabe.keygen(self.msk, attrs)
        self._act(gk_entry, "KMM", "issue_key",
                  {"username": username, "attributes": sorted(attrs)}, broker_id)
        return {
            "user_id": user_id,
            "broker_id": broker_id,
            "attributes": sorted(attrs),
            "user_key": user_key.to_bytes(),
        }

    def login(self, username: str, password: str) -> Session:
        gk_entry = self._gate("", "login", {"username": username})
        session = self.ac.authenticate(username, password)
        self.bl.append("AACM", "authenticate", {"username": username},
                       request_id=gk_entry["request_id"], user_id=session.user_id,
                       broker_id=session.broker_id)
        return session

    # -- upload / review ---------------------------------------------------

    def submit_upload(self, token: str, patient_id: str, payload: bytes,
                      transport_key: bytes = b"", target_file_id: str | None = None) -> ReviewItem:
        session = self._session(token)
        gk_entry = self._gate(session.user_id, "submit_upload",
                              {"patient_id": patient_id, "target_file_id": target_file_id})
        patient = self.ac.user(patient_id)
        if patient["kind"] != "patient":
            raise WorkflowError("upload target is not a patient")
        if target_file_id is not None and self._file_row(target_file_id) is None:
            raise NotFound(target_file_id)
        review = ReviewItem(
            str(uuid.uuid4()), session.user_id, patient_id, bytes(payload),
            bytes(transport_key), "pending", time.time(), None, target_file_id,
        )
        with self.db.transaction() as cur:
            cur.execute(
                "INSERT INTO reviews (review_id, dp_id, patient_id, payload, transport_key,"
                " status, submitted_at, decided_at, target_file_id)"
                " VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)",
                (review.review_id, review.dp_id, review.patient_id, review.payload,
                 review.transport_key, review.status, review.submitted_at, None,
                 review.target_file_id),
            )
        self._act(gk_entry, "DMM", "queue_review",
                  {"patient_id": patient_id, "review_id": review.review_id},
                  partition_for(patient_id, self.broker_count))
        return review

    def pending_reviews(self, token: str) -> list[ReviewItem]:
        session = self._session(token)
        rows = self.db.query(
            "SELECT * FROM reviews WHERE patient_id = ? AND status = 'pending'"
            " ORDER BY submitted_at",
            (session.user_id,),
        )
        return [self._review_from_row(r) for r in rows]

    @staticmethod
    def _review_from_row(r: dict) -> ReviewItem:
        return ReviewItem(r["review_id"], r["dp_id"], r["patient_id"], r["payload"],
                          r["transport_key"], r["status"], r["submitted_at"],
                          r["decided_at"], r["target_file_id"])

    def _file_row(self, file_id: str) -> dict | None:
        return self.db.one("SELECT * FROM files WHERE file_id = ?", (file_id,))

    def _file_meta(self, row: dict) -> FileMeta:
        return FileMeta(row["file_id"], row["patient_id"], row["doc_id"],
                        row["storage_id"], row["threshold"], row["total"],
                        tuple(json.loads(row["cloud_ids"])), row["created_at"],
                        row["updated_at"], row["version"])

    def approve(self, token: str, review_id: str, decision: str, *,
                policy_text: str | None = None, cloud_ids: list | None = None,
                threshold: int | None = None,
                encrypted_doc: bytes | None = None) -> FileMeta | None:
        """Patient decision on a pending review item.

        On approval the patient-client-encrypted document is split and fanned
        out, the policy stored, and the file committed; any failure along the
        way rolls the whole step back.  Updates delete the prior version's
        shares only after the new version is committed.
        """
        session = self._session(token)
        gk_params = {"review_id": review_id, "decision": decision}
        row = self.db.one("SELECT * FROM reviews WHERE review_id = ?", (review_id,))
        if row is None:
            self._gate(session.user_id, "approve", gk_params)
            raise NotFound(review_id)
        review = self._review_from_row(row)
        file_id = review.target_file_id or str(uuid.uuid4())
        if decision == "approve":
            gk_params["file_id"] = file_id
        gk_entry = self._gate(session.user_id, "approve", gk_params)
        if review.patient_id != session.user_id:
            raise NotOwner("only the patient may decide their review items")
        if review.status != "pending":
            raise WorkflowError(f"review already {review.status}")
        broker_id = session.broker_id

        if decision == "reject":
            with self.db.transaction() as cur:
                cur.execute(
                    "UPDATE reviews SET status = 'rejected', decided_at = ? WHERE review_id = ?",
                    (time.time(), review_id),
                )
            self._act(gk_entry, "DMM", "decide_review",
                      {"review_id": review_id, "decision": "reject"}, broker_id)
            return None
        if decision != "approve":
            raise WorkflowError(f"unknown decision: {decision}")
        if not policy_text or not cloud_ids or threshold is None or encrypted_doc is None:
            raise WorkflowError("approve requires policy, clouds, threshold, and ciphertext")
        policy = parse_policy(policy_text)
        n = len(cloud_ids)
        if not 1 <= threshold <= n:
            raise WorkflowError(f"threshold {threshold} out of range for {n} clouds")
        doc = EncryptedDocument.from_bytes(encrypted_doc)

        from .sharing import split
        prior = self._file_row(file_id) if review.target_file_id else None
        storage_id = str(uuid.uuid4())
        shares = split(encrypted_doc, n, threshold, file_id=storage_id)
        self._act(gk_entry, "DMM", "decide_review",
                  {"review_id": review_id, "decision": "approve"}, broker_id)
        entries = self.mcp.upload_shares(storage_id, shares, list(cloud_ids))
        try:
            self._act(gk_entry, "MCP", "store_shares",
                      {"file_id": file_id, "storage_id": storage_id,
                       "cloud_ids": list(cloud_ids), "n": n, "t": threshold}, broker_id)
            self.ac.store_policy(session.user_id, file_id, policy)
            self._act(gk_entry, "AACM", "store_policy",
                      {"file_id": file_id, "policy": policy_text}, broker_id)
            now = time.time()
            with self.db.transaction() as cur:
                if prior is not None:
                    cur.execute(
                        "UPDATE files SET doc_id = ?, storage_id = ?, threshold = ?, total = ?,"
                        " cloud_ids = ?, updated_at = ?, version = version + 1 WHERE file_id = ?",
                        (doc.doc_id, storage_id, threshold, n, json.dumps(list(cloud_ids)),
                         now, file_id),
                    )
                else:
                    cur.execute(
                        "INSERT INTO files (file_id, patient_id, doc_id, storage_id, threshold,"
                        " total, cloud_ids, created_at, updated_at, version)"
                        " VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, 1)",
                        (file_id, session.user_id, doc.doc_id, storage_id, threshold, n,
                         json.dumps(list(cloud_ids)), now, now),
                    )
                cur.execute(
                    "UPDATE reviews SET status = 'approved', decided_at = ? WHERE review_id = ?",
                    (now, review_id),
                )
        except BaseException:
            # roll back the fan-out so no partially committed version exists
            try:
                self.mcp.delete_file(storage_id)
            except Exception:
                pass
            raise
        self._act(gk_entry, "DMM", "commit_file",
                  {"file_id": file_id, "version": (prior["version"] + 1) if prior else 1},
                  broker_id)
        if prior is not None:
            try:
                self.mcp.delete_file(prior["storage_id"])
            finally:
                self._act(gk_entry, "MCP", "delete_shares",
                          {"file_id": file_id, "storage_id": prior["storage_id"]}, broker_id)
        return self._file_meta(self._file_row(file_id))

    # -- retrieval ---------------------------------------------------------

    def retrieve(self, token: str, file_id: str) -> bytes:
        """Mediated read: access check, then share fan-in; ciphertext out."""
        session = self._session(token)
        gk_entry = self._gate(session.user_id, "retrieve", {"file_id": file_id})
        row = self._file_row(file_id)
        if row is None:
            raise NotFound(file_id)
        meta = self._file_meta(row)
        broker_id = partition_for(meta.patient_id, self.broker_count)
        decision = self.ac.check_access(session.user_id, file_id)
        self._act(gk_entry, "AACM", "access_check",
                  {"file_id": file_id, "decision": "allow" if decision else "deny",
                   "reason": decision.reason}, broker_id)
        if not decision:
            request = {
                "request_id": str(uuid.uuid4()),
                "requestor_id": session.user_id,
                "patient_id": meta.patient_id,
                "file_id": file_id,
                "reason": decision.reason,
            }
            with self.db.transaction() as cur:
                cur.execute(
                    "INSERT INTO access_requests (request_id, requestor_id, patient_id,"
                    " file_id, reason, created_at, status) VALUES (?, ?, ?, ?, ?, ?, 'pending')",
                    (request["request_id"], request["requestor_id"], request["patient_id"],
                     request["file_id"], request["reason"], time.time()),
                )
            self._notify(meta.patient_id, "access_request", request)
            self._act(gk_entry, "DMM", "queue_access_request",
                      {"file_id": file_id, "requestor_id": session.user_id}, broker_id)
            raise AccessDenied(decision.reason)
        self._act(gk_entry, "MCP", "retrieve_shares",
                  {"file_id": file_id, "storage_id": meta.storage_id}, broker_id)
        data = self.mcp.retrieve_file(meta.storage_id, meta.threshold)
        self._act(gk_entry, "DMM", "deliver_document",
                  {"file_id": file_id, "doc_id": meta.doc_id}, broker_id)
        return data

    def emergency_retrieve(self, token: str, patient_id: str, file_id: str) -> bytes:
        """Break-glass path for hospital emergency keys; loudly audited."""
        session = self._session(token)
        gk_entry = self._gate(session.user_id, "emergency",
                              {"patient_id": patient_id, "file_id": file_id})
        user = self.ac.user(session.user_id)
        broker_id = partition_for(patient_id, self.broker_count)
        if user["kind"] != "hospital" or "emergency_room" not in user["attributes"]:
            self._act(gk_entry, "AACM", "access_check",
                      {"file_id": file_id, "decision": "deny",
                       "reason": "not-an-emergency-key-holder"}, broker_id)
            raise AccessDenied("emergency access requires a hospital emergency key")
        row = self._file_row(file_id)
        if row is None or row["patient_id"] != patient_id:
            raise NotFound(file_id)
        meta = self._file_meta(row)
        self._act(gk_entry, "AACM", "access_check",
                  {"file_id": file_id, "decision": "allow",
                   "reason": "emergency-override", "emergency": True}, broker_id)
        self._act(gk_entry, "MCP", "retrieve_shares",
                  {"file_id": file_id, "storage_id": meta.storage_id}, broker_id)
        data = self.mcp.retrieve_file(meta.storage_id, meta.threshold)
        self._act(gk_entry, "DMM", "emergency_deliver",
                  {"file_id": file_id, "doc_id": meta.doc_id, "emergency": True}, broker_id)
        self._notify(patient_id, "emergency_access",
                     {"file_id": file_id, "hospital_id": session.user_id})
        return data

    # -- policy and revocation ---------------------------------------------

    def update_policy(self, token: str, file_id: str, policy_text: str):
        session = self._session(token)
        gk_entry = self._gate(session.user_id, "policy_update",
                              {"file_id": file_id, "policy": policy_text})
        record = self.ac.store_policy(session.user_id, file_id, parse_policy(policy_text))
        self._act(gk_entry, "AACM", "store_policy",
                  {"file_id": file_id, "policy": policy_text}, session.broker_id)
        return record

    def revoke(self, token: str, *, target_user_id: str | None = None,
               attribute: str | None = None, file_id: str | None = None,
               undo: bool = False) -> None:
        if (target_user_id is None) == (attribute is None):
            raise WorkflowError("revoke exactly one of user or attribute")
        session = self._session(token)
        gk_entry = self._gate(session.user_id, "revoke",
                              {"target_user_id": target_user_id, "attribute": attribute,
                               "file_id": file_id, "undo": undo})
        if target_user_id is not None:
            if undo:
                self.ac.unrevoke_user(session.user_id, target_user_id, file_id=file_id)
            else:
                self.ac.revoke_user(session.user_id, target_user_id, file_id=file_id)
        else:
            if undo:
                self.ac.unrevoke_attribute(session.user_id, attribute, file_id=file_id)
            else:
                self.ac.revoke_attribute(session.user_id, attribute, file_id=file_id)
        self._act(gk_entry, "AACM", "unrevoke" if undo else "revoke",
                  {"target_user_id": target_user_id, "attribute": attribute,
                   "file_id": file_id}, session.broker_id)

    # -- queries and notifications -----------------------------------------

    def files_for(self, token: str) -> list[FileMeta]:
        session = self._session(token)
        rows = self.db.query("SELECT * FROM files WHERE patient_id = ? ORDER BY created_at",
                             (session.user_id,))
        return [self._file_meta(r) for r in rows]

    def access_requests_for(self, token: str) -> list[dict]:
        session = self._session(token)
        return self.db.query(
            "SELECT * FROM access_requests WHERE patient_id = ? ORDER BY created_at",
            (session.user_id,),
        )

    def notifications_for(self, token: str) -> list[dict]:
        session = self._session(token)
        rows = self.db.query(
            "SELECT * FROM notifications WHERE recipient = ? AND acked = 0 ORDER BY created_at",
            (session.user_id,),
        )
        for r in rows:
            r["body"] = json.loads(r["body"])
        return rows

    def _notify(self, recipient: str, kind: str, body: dict) -> None:
        with self.db.transaction() as cur:
            cur.execute(
                "INSERT INTO notifications (note_id, recipient, kind, body, created_at)"
                " VALUES (?, ?, ?, ?, ?)",
                (str(uuid.uuid4()), recipient, kind,
                 json.dumps(body, sort_keys=True), time.time()),
            )

    def record_alert(self, alert) -> None:
        """Inspector delivery hook: persist and fan out to patient + admin."""
        recipients = ["admin"]
        if alert.bl_seq:
            for entry in self.bl.entries(max(0, alert.bl_seq - 1)):
                if entry["seq"] == alert.bl_seq:
                    file_id = entry.get("params", {}).get("file_id")
                    if file_id:
                        row = self._file_row(file_id)
                        if row:
                            recipients.append(row["patient_id"])
                    break
        with self.db.transaction() as cur:
            cur.execute(
                "INSERT OR IGNORE INTO alerts (alert_id, rule_id, bl_seq, gk_seq,"
                " description, severity, recipients, raised_at)"
                " VALUES (?, ?, ?, ?, ?, ?, ?, ?)",
                (alert.alert_id, alert.rule_id, alert.bl_seq, alert.gk_seq,
                 alert.description, alert.severity, json.dumps(recipients),
                 alert.raised_at),
            )
        for recipient in recipients:
            self._notify(recipient, "alert", alert.to_dict())

    def alerts(self) -> list[dict]:
        rows = self.db.query("SELECT * FROM alerts ORDER BY raised_at")
        for r in rows:
            r["recipients"] = json.loads(r["recipients"])
        return rows
