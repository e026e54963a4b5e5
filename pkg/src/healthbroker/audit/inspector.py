"""Cross-matcher between the request log and the action log.

Every action the broker records must be explainable by a user request: same
request id, matching fields, within the pairing window, and (for data
retrieval) preceded by an access check.  Anything else becomes an alert, as
does a broken hash chain, a truncated log, a malformed entry, or an action
kind no rule covers.  Inspection itself never raises on bad input.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field

from .logs import GENESIS_HASH, BrokerLog, GatekeeperLog

__all__ = ["InspectionRule", "Alert", "load_rules", "default_rules", "inspect", "Inspector"]

_DEFAULT_RULES_PATH = os.path.join(os.path.dirname(__file__), "default_rules.json")


@dataclass(frozen=True)
class InspectionRule:
    rule_id: str
    module: str
    action: str
    gk_kinds: tuple
    field_pairs: tuple            # (gk_field, bl_field) pairs; file ids, user ids
    window_seconds: float
    severity: str
    requires_prior: str | None = None

    @property
    def event_kind(self) -> str:
        return f"{self.module}.{self.action}"


@dataclass(frozen=True)
class Alert:
    alert_id: str
    rule_id: str
    bl_seq: int | None
    gk_seq: int | None
    description: str
    severity: str
    raised_at: float = field(default_factory=time.time)

    def to_dict(self) -> dict:
        return {
            "alert_id": self.alert_id,
            "rule_id": self.rule_id,
            "bl_seq": self.bl_seq,
            "gk_seq": self.gk_seq,
            "description": self.description,
            "severity": self.severity,
            "raised_at": self.raised_at,
        }


def _mk_alert(rule_id, bl_seq, gk_seq, description, severity="high") -> Alert:
    return Alert(str(uuid.uuid4()), rule_id, bl_seq, gk_seq, description, severity)


def load_rules(path: str) -> list[InspectionRule]:
    with open(path) as fh:
        raw = json.load(fh)
    return [
        InspectionRule(
            rule_id=r["rule_id"],
            module=r["module"],
            action=r["action"],
            gk_kinds=tuple(r["gk_kinds"]),
            field_pairs=tuple((a, b) for a, b in r["field_pairs"]),
            window_seconds=float(r.get("window_seconds", 30)),
            severity=r.get("severity", "high"),
            requires_prior=r.get("requires_prior"),
        )
        for r in raw
    ]


def default_rules() -> list[InspectionRule]:
    return load_rules(_DEFAULT_RULES_PATH)


def _gk_value(gk: dict, fname: str):
    if fname in ("user_id", "kind"):
        return gk.get(fname)
    return gk.get("params", {}).get(fname)


def _bl_value(bl: dict, fname: str):
    if fname in ("user_id", "module", "action"):
        return bl.get(fname)
    return bl.get("params", {}).get(fname)


def inspect(gk_entries: list[dict], bl_entries: list[dict], rules: list[InspectionRule],
            *, chain_prev_hash: str = GENESIS_HASH) -> list[Alert]:
    """One pass over a window of both logs; returns all mismatch alerts."""
    if not rules:
        raise ValueError("rule set must be non-empty")
    alerts: list[Alert] = []

    status, broken_at = BrokerLog.verify_entries(bl_entries, chain_prev_hash)
    if status == "broken":
        alerts.append(_mk_alert("chain-integrity", broken_at, None,
                                f"hash chain broken at action-log entry {broken_at}",
                                "critical"))

    by_event: dict[tuple, InspectionRule] = {(r.module, r.action): r for r in rules}
    gk_by_request: dict[str, dict] = {}
    for gk in gk_entries:
        rid = gk.get("request_id")
        if rid:
            gk_by_request[rid] = gk

    actions_by_request: dict[str, list[dict]] = {}
    for bl in bl_entries:
        actions_by_request.setdefault(bl.get("request_id", ""), []).append(bl)

    for bl in bl_entries:
        seq = bl.get("seq")
        if not isinstance(bl.get("module"), str) or not isinstance(bl.get("action"), str) \
                or not isinstance(bl.get("params"), dict):
            alerts.append(_mk_alert("malformed-entry", seq, None,
                                    f"malformed action-log entry {seq}", "high"))
            continue
        rule = by_event.get((bl["module"], bl["action"]))
        if rule is None:
            alerts.append(_mk_alert("uncovered-kind", seq, None,
                                    f"no rule covers action {bl['module']}.{bl['action']}"
                                    f" (entry {seq})", "high"))
            continue
        gk = gk_by_request.get(bl.get("request_id", ""))
        if gk is None:
            alerts.append(_mk_alert(rule.rule_id, seq, None,
                                    f"unrequested action {rule.event_kind} (entry {seq}):"
                                    " no matching user request", rule.severity))
            continue
        if gk.get("kind") not in rule.gk_kinds:
            alerts.append(_mk_alert(rule.rule_id, seq, gk.get("seq"),
                                    f"action {rule.event_kind} (entry {seq}) paired with"
                                    f" request kind {gk.get('kind')!r}", rule.severity))
            continue
        mismatched = [
            (gf, bf) for gf, bf in rule.field_pairs
            if _gk_value(gk, gf) != _bl_value(bl, bf)
        ]
        if mismatched:
            gf, bf = mismatched[0]
            alerts.append(_mk_alert(
                rule.rule_id, seq, gk.get("seq"),
                f"field mismatch on {rule.event_kind} (entry {seq}): request"
                f" {gf}={_gk_value(gk, gf)!r} but action {bf}={_bl_value(bl, bf)!r}",
                rule.severity))
            continue
        delta = bl.get("ts", 0) - gk.get("ts", 0)
        if not 0 <= delta <= rule.window_seconds:
            alerts.append(_mk_alert(rule.rule_id, seq, gk.get("seq"),
                                    f"action {rule.event_kind} (entry {seq}) outside the"
                                    f" pairing window ({delta:.1f}s)", rule.severity))
            continue
        if rule.requires_prior:
            prior = [
                other for other in actions_by_request.get(bl.get("request_id", ""), [])
                if other.get("action") == rule.requires_prior
                and other.get("seq", 0) < (seq or 0)
            ]
            if not prior:
                alerts.append(_mk_alert(
                    rule.rule_id, seq, gk.get("seq"),
                    f"action {rule.event_kind} (entry {seq}) without a prior"
                    f" {rule.requires_prior} for the same request", "critical"))
    return alerts


class Inspector:
    """Continuous incremental inspection with a persisted cursor.

    Alerts are delivered at-least-once through ``deliver`` and deduplicated
    by (rule id, offending entry) across restarts.
    """

    def __init__(self, gk: GatekeeperLog, bl: BrokerLog,
                 rules: list[InspectionRule] | None = None,
                 deliver=None, cursor_path: str | None = None,
                 gk_retention_seconds: float = 300.0):
        self.gk = gk
        self.bl = bl
        self.rules = rules or default_rules()
        self.deliver = deliver or (lambda alert: None)
        self.cursor_path = cursor_path
        self.gk_retention = gk_retention_seconds
        self._gk_buffer: list[dict] = []
        self._state = {"gk_seq": 0, "bl_seq": 0, "prev_hash": GENESIS_HASH, "seen": []}
        self._seen: set[tuple] = set()
        self._thread = None
        self._stop = threading.Event()
        self._lock = threading.Lock()
        if cursor_path and os.path.exists(cursor_path):
            with open(cursor_path) as fh:
                self._state.update(json.load(fh))
            self._seen = {tuple(x) for x in self._state.get("seen", [])}
            # replay retained requests so restarts keep pairing context
            self._gk_buffer = self.gk.entries(0)

    def _save_cursor(self):
        if not self.cursor_path:
            return
        self._state["seen"] = sorted(self._seen)
        tmp = self.cursor_path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(self._state, fh)
        os.replace(tmp, self.cursor_path)

    def poll(self) -> list[Alert]:
        """Inspect everything appended since the last poll."""
        with self._lock:
            try:
                new_gk = self.gk.entries(self._state["gk_seq"])
                new_bl = self.bl.entries(self._state["bl_seq"])
                head_ok = self.bl.check_truncation()
                bl_len = len(self.bl)
            except Exception as exc:
                alert = _mk_alert("inspector-health", None, None,
                                  f"logs unreachable: {exc}", "critical")
                self.deliver(alert)
                return [alert]
            self._gk_buffer.extend(new_gk)
            cutoff = time.time() - self.gk_retention
            self._gk_buffer = [g for g in self._gk_buffer if g["ts"] >= cutoff]

            alerts = inspect(self._gk_buffer, new_bl, self.rules,
                             chain_prev_hash=self._state["prev_hash"])
            if bl_len < self._state["bl_seq"] or not head_ok:
                alerts.append(_mk_alert("chain-truncation", bl_len, None,
                                        "action log shorter than its recorded head",
                                        "critical"))
            out = []
            for alert in alerts:
                dedup_key = (alert.rule_id, alert.bl_seq)
                if dedup_key in self._seen:
                    continue
                self._seen.add(dedup_key)
                self.deliver(alert)
                out.append(alert)
            if new_gk:
                self._state["gk_seq"] = new_gk[-1]["seq"]
            if new_bl:
                self._state["bl_seq"] = new_bl[-1]["seq"]
                self._state["prev_hash"] = new_bl[-1]["entry_hash"]
            self._save_cursor()
            return out

    def start(self, poll_interval: float = 1.0):
        def loop():
            while not self._stop.wait(poll_interval):
                self.poll()
        self._stop.clear()
        self._thread = threading.Thread(target=loop, daemon=True)
        self._thread.start()

    def stop(self):
        self._stop.set()
        if self._thread:
            self._thread.join(timeout=5)
            self._thread = None
