"""HTTP+JSON surface over the broker workflows.

Binary payloads (documents, keys, public parameters) travel base64-encoded.
Sessions are opaque bearer tokens.  Responses never carry plaintext health
data, private keys, or password material.
"""

from __future__ import annotations

import base64
import time
import uuid

from fastapi import Depends, FastAPI, Header, HTTPException
from pydantic import BaseModel

from .abe.policy import PolicySyntaxError
from .access import (
    AccountLocked,
    BadCredentials,
    DuplicateUsername,
    NotOwner,
    SessionInvalid,
    UnknownFile,
)
from .aia import AttributeGrant, InvalidGrant
from .broker import AccessDenied, NotFound, WorkflowError
from .config import ApiConfig, build_service
from .storage.proxy import FileNotFound, InsufficientLiveShares

__all__ = ["create_app", "serve"]


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode()


def _unb64(text: str) -> bytes:
    try:
        return base64.b64decode(text, validate=True)
    except Exception:
        raise HTTPException(400, "invalid base64 payload")


class RegisterBody(BaseModel):
    username: str
    password: str
    kind: str
    attributes: list[str] | None = None
    grant: dict | None = None


class LoginBody(BaseModel):
    username: str
    password: str


class UploadBody(BaseModel):
    patient_id: str
    payload_b64: str
    transport_key_b64: str = ""
    target_file_id: str | None = None


class DecisionBody(BaseModel):
    decision: str
    policy: str | None = None
    cloud_ids: list[str] | None = None
    threshold: int | None = None
    ciphertext_b64: str | None = None


class PolicyBody(BaseModel):
    policy: str


class RevocationBody(BaseModel):
    target_user_id: str | None = None
    attribute: str | None = None
    file_id: str | None = None
    undo: bool = False


class AccessRequestBody(BaseModel):
    file_id: str
    message: str = ""


def create_app(config: ApiConfig | None = None) -> FastAPI:
    config = config or ApiConfig()
    service, inspector = build_service(config)
    app = FastAPI(title="health record broker")
    app.state.service = service
    app.state.inspector = inspector
    app.state.config = config

    def bearer(authorization: str = Header(default="")) -> str:
        if not authorization.startswith("Bearer "):
            # still gatekeeper-logged below via the session failure path
            raise HTTPException(401, "missing bearer token")
        return authorization.removeprefix("Bearer ")

    def translate(exc: Exception) -> HTTPException:
        if isinstance(exc, (SessionInvalid,)):
            return HTTPException(401, str(exc))
        if isinstance(exc, (BadCredentials,)):
            return HTTPException(401, "bad username or password")
        if isinstance(exc, AccountLocked):
            return HTTPException(423, str(exc))
        if isinstance(exc, AccessDenied):
            return HTTPException(403, exc.reason)
        if isinstance(exc, NotOwner):
            return HTTPException(403, str(exc))
        if isinstance(exc, (NotFound, UnknownFile, FileNotFound)):
            return HTTPException(404, "not found")
        if isinstance(exc, DuplicateUsername):
            return HTTPException(409, "username already registered")
        if isinstance(exc, InsufficientLiveShares):
            return HTTPException(503, str(exc))
        if isinstance(exc, InvalidGrant):
            return HTTPException(400, str(exc))
        if isinstance(exc, (WorkflowError, PolicySyntaxError, ValueError)):
            return HTTPException(400, str(exc))
        if isinstance(exc, KeyError):
            return HTTPException(404, "not found")
        return HTTPException(500, "internal error")

    def run(fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except HTTPException:
            raise
        except Exception as exc:
            raise translate(exc) from exc

    @app.post("/register")
    def register(body: RegisterBody):
        if body.grant is not None:
            grant = AttributeGrant.from_dict(body.grant)
        elif body.attributes:
            grant = service.aia.issue_grant(body.username, body.attributes)
        else:
            raise HTTPException(400, "attributes or grant required")
        result = run(service.register_user, body.username, body.password, body.kind, grant)
        return {
            "user_id": result["user_id"],
            "broker_id": result["broker_id"],
            "attributes": result["attributes"],
            "user_key_b64": _b64(result["user_key"]),
            "public_params_b64": _b64(service.public_params_bytes()),
        }

    @app.post("/login")
    def login(body: LoginBody):
        session = run(service.login, body.username, body.password)
        return {
            "token": session.token,
            "user_id": session.user_id,
            "broker_id": session.broker_id,
            "expires_at": session.expires_at,
            "public_params_b64": _b64(service.public_params_bytes()),
        }

    @app.post("/uploads")
    def submit_upload(body: UploadBody, token: str = Depends(bearer)):
        review = run(
            service.submit_upload, token, body.patient_id, _unb64(body.payload_b64),
            _unb64(body.transport_key_b64) if body.transport_key_b64 else b"",
            body.target_file_id,
        )
        return review.to_dict(include_payload=False)

    @app.get("/reviews")
    def reviews(token: str = Depends(bearer)):
        return {"reviews": [r.to_dict() for r in run(service.pending_reviews, token)]}

    @app.post("/reviews/{review_id}/decision")
    def decide(review_id: str, body: DecisionBody, token: str = Depends(bearer)):
        meta = run(
            service.approve, token, review_id, body.decision,
            policy_text=body.policy, cloud_ids=body.cloud_ids,
            threshold=body.threshold,
            encrypted_doc=_unb64(body.ciphertext_b64) if body.ciphertext_b64 else None,
        )
        if meta is None:
            return {"status": "rejected", "review_id": review_id}
        return {"status": "approved", "file": meta.to_dict()}

    @app.get("/files/{file_id}")
    def retrieve(file_id: str, token: str = Depends(bearer)):
        data = run(service.retrieve, token, file_id)
        return {"file_id": file_id, "ciphertext_b64": _b64(data)}

    @app.post("/files/{file_id}/policy")
    def update_policy(file_id: str, body: PolicyBody, token: str = Depends(bearer)):
        record = run(service.update_policy, token, file_id, body.policy)
        return {"file_id": file_id, "policy": body.policy, "updated_at": record.updated_at}

    @app.post("/revocations")
    def revoke(body: RevocationBody, token: str = Depends(bearer)):
        run(service.revoke, token, target_user_id=body.target_user_id,
            attribute=body.attribute, file_id=body.file_id, undo=body.undo)
        return {"status": "ok"}

    @app.post("/access-requests")
    def access_request(body: AccessRequestBody, token: str = Depends(bearer)):
        session = run(service.ac.session, token)
        service.gk.record(session.user_id, "access_request", {"file_id": body.file_id})
        row = service.db.one("SELECT patient_id FROM files WHERE file_id = ?", (body.file_id,))
        if row is None:
            raise HTTPException(404, "not found")
        request_id = str(uuid.uuid4())
        with service.db.transaction() as cur:
            cur.execute(
                "INSERT INTO access_requests (request_id, requestor_id, patient_id, file_id,"
                " reason, created_at, status) VALUES (?, ?, ?, ?, ?, ?, 'pending')",
                (request_id, session.user_id, row["patient_id"], body.file_id,
                 body.message or "requested access", time.time()),
            )
        service._notify(row["patient_id"], "access_request",
                        {"request_id": request_id, "file_id": body.file_id,
                         "requestor_id": session.user_id, "message": body.message})
        return {"request_id": request_id, "status": "pending"}

    @app.post("/emergency/{patient_id}/{file_id}")
    def emergency(patient_id: str, file_id: str, token: str = Depends(bearer)):
        data = run(service.emergency_retrieve, token, patient_id, file_id)
        return {"file_id": file_id, "ciphertext_b64": _b64(data), "emergency": True}

    @app.get("/alerts")
    def alerts(token: str = Depends(bearer)):
        session = run(service.ac.session, token)
        user = service.ac.user(session.user_id)
        rows = service.alerts()
        if user["username"] not in config.admin_usernames:
            rows = [r for r in rows if session.user_id in r["recipients"]]
        return {"alerts": rows}

    @app.get("/access-requests")
    def list_access_requests(token: str = Depends(bearer)):
        return {"requests": run(service.access_requests_for, token)}

    @app.get("/notifications")
    def notifications(token: str = Depends(bearer)):
        return {"notifications": run(service.notifications_for, token)}

    @app.get("/files")
    def list_files(token: str = Depends(bearer)):
        return {"files": [m.to_dict() for m in run(service.files_for, token)]}

    @app.get("/audit/chain-status")
    def chain_status():
        status, broken_at = service.bl.verify_chain()
        seq, head = service.bl.head()
        return {"status": status, "broken_at": broken_at, "head_seq": seq, "head_hash": head}

    @app.get("/health")
    def health():
        return {
            "status": "ready",
            "brokers": service.broker_count,
            "backends": service.mcp.health(),
            "cloud_ids": [d.cloud_id for d in service.mcp.backends()],
            "default_threshold": config.default_threshold,
            "default_total": config.default_total,
        }

    return app


def serve(config: ApiConfig | None = None):
    """Run the service until interrupted; inspector polls in the background."""
    import uvicorn

    config = config or ApiConfig()
    app = create_app(config)
    app.state.inspector.start(config.inspector_poll_interval)
    try:
        uvicorn.run(app, host=config.listen_host, port=config.listen_port)
    finally:
        app.state.inspector.stop()
