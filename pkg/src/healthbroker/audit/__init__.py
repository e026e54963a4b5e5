"""Tamper-evident audit logs and the log cross-matching inspector."""

from .inspector import Alert, InspectionRule, Inspector, default_rules, inspect, load_rules
from .logs import GENESIS_HASH, BrokerLog, GatekeeperLog, canonical

__all__ = [
    "Alert",
    "BrokerLog",
    "GENESIS_HASH",
    "GatekeeperLog",
    "InspectionRule",
    "Inspector",
    "canonical",
    "default_rules",
    "inspect",
    "load_rules",
]
