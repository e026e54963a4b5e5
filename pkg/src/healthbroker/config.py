"""Service configuration and assembly."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .access import AccessControl
from .aia import AttributeAuthority
from .audit.inspector import Inspector, default_rules, load_rules
from .audit.logs import BrokerLog, GatekeeperLog
from .broker import BrokerService
from .db import Database
from .storage.backends import CloudBackendDescriptor
from .storage.proxy import MultiCloudProxy

__all__ = ["ApiConfig", "build_service"]


@dataclass
class ApiConfig:
    listen_host: str = "127.0.0.1"
    listen_port: int = 8000
    broker_count: int = 2
    default_threshold: int = 3
    default_total: int = 5
    backends: list = field(default_factory=list)     # CloudBackendDescriptor or dict
    attempt_limit: int = 5
    pairing_window: float = 30.0
    database_path: str = ":memory:"
    log_dir: str | None = None
    rules_path: str | None = None
    security_level: int = 80
    test_seed: str | None = None
    session_ttl: float = 3600.0
    admin_usernames: list = field(default_factory=lambda: ["admin"])
    inspector_poll_interval: float = 1.0

    def __post_init__(self):
        if self.broker_count < 1:
            raise ValueError("broker count must be >= 1")
        if not 1 <= self.default_threshold <= self.default_total:
            raise ValueError("default threshold must satisfy 1 <= T <= N")
        self.database_path = os.environ.get("HAB_DATABASE", self.database_path)
        self.listen_host = os.environ.get("HAB_LISTEN_HOST", self.listen_host)
        self.listen_port = int(os.environ.get("HAB_LISTEN_PORT", self.listen_port))
        self.backends = [
            b if isinstance(b, CloudBackendDescriptor) else CloudBackendDescriptor(
                cloud_id=b["cloud_id"], kind=b["kind"],
                display_name=b.get("display_name", ""), config=b.get("config", {}),
            )
            for b in self.backends
        ]
        if not self.backends:
            self.backends = [
                CloudBackendDescriptor(f"cloud-{i}", "in-memory", f"Mock cloud {i}")
                for i in range(1, self.default_total + 1)
            ]

    @classmethod
    def from_file(cls, path: str) -> "ApiConfig":
        with open(path) as fh:
            return cls(**json.load(fh))


def build_service(config: ApiConfig) -> tuple[BrokerService, Inspector]:
    db = Database(config.database_path)
    mcp = MultiCloudProxy(db)
    for desc in config.backends:
        mcp.register_backend(desc)
    ac = AccessControl(db, attempt_limit=config.attempt_limit,
                       session_ttl=config.session_ttl)
    gk_path = bl_path = cursor_path = None
    if config.log_dir:
        os.makedirs(config.log_dir, exist_ok=True)
        gk_path = os.path.join(config.log_dir, "gatekeeper.ndjson")
        bl_path = os.path.join(config.log_dir, "broker_log.ndjson")
        cursor_path = os.path.join(config.log_dir, "inspector_cursor.json")
    gk = GatekeeperLog(gk_path)
    bl = BrokerLog(bl_path)
    service = BrokerService(
        db, mcp, ac, AttributeAuthority(), gk, bl,
        broker_count=config.broker_count,
        security_level=config.security_level,
        test_seed=config.test_seed,
    )
    rules = load_rules(config.rules_path) if config.rules_path else default_rules()
    rules = [
        type(r)(**{**r.__dict__, "window_seconds": config.pairing_window})
        for r in rules
    ]
    inspector = Inspector(gk, bl, rules, deliver=service.record_alert,
                          cursor_path=cursor_path)
    return service, inspector
