"""Access-policy trees and their text grammar.

Grammar (keywords case-insensitive, AND binds tighter than OR)::

    expr     := or_expr
    or_expr  := and_expr (OR and_expr)*
    and_expr := atom (AND atom)*
    atom     := attribute | '(' expr ')' | THRESHOLD '(' k ',' expr (',' expr)+ ')'

There is deliberately no wildcard or allow-all production; an empty policy
is a parse error.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

__all__ = [
    "PolicyTree",
    "Leaf",
    "Threshold",
    "PolicySyntaxError",
    "parse_policy",
    "satisfies",
    "normalize_attribute",
    "normalize_attributes",
    "policy_to_text",
]

_ATTR_RE = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_\-.]*")
_KEYWORDS = {"and", "or", "threshold"}


class PolicySyntaxError(ValueError):
    """Raised on malformed policy text; carries the offending position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


def normalize_attribute(name: str) -> str:
    name = name.strip().casefold()
    if not name or not _ATTR_RE.fullmatch(name):
        raise ValueError(f"invalid attribute name: {name!r}")
    if name in _KEYWORDS:
        raise ValueError(f"attribute name collides with keyword: {name!r}")
    return name


def normalize_attributes(attrs) -> frozenset[str]:
    """Validated, case-normalized attribute set; must be non-empty."""
    out = frozenset(normalize_attribute(a) for a in attrs)
    if not out:
        raise ValueError("attribute set must be non-empty")
    return out


@dataclass(frozen=True)
class Leaf:
    attribute: str


@dataclass(frozen=True)
class Threshold:
    k: int
    children: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if len(self.children) < 1:
            raise ValueError("threshold node needs at least one child")
        if not (1 <= self.k <= len(self.children)):
            raise ValueError(
                f"threshold k={self.k} out of range for {len(self.children)} children"
            )


PolicyTree = Leaf | Threshold


def satisfies(policy: PolicyTree, attrs) -> bool:
    """Pure threshold-tree evaluation against an attribute set."""
    attrs = normalize_attributes(attrs)

    def walk(node) -> bool:
        if isinstance(node, Leaf):
            return node.attribute in attrs
        hits = sum(1 for c in node.children if walk(c))
        return hits >= node.k

    return walk(policy)


def policy_to_text(policy: PolicyTree) -> str:
    """Canonical text form; parse_policy(policy_to_text(t)) == t."""
    if isinstance(policy, Leaf):
        return policy.attribute
    if policy.k == len(policy.children) and len(policy.children) > 1:
        return "(" + " AND ".join(policy_to_text(c) for c in policy.children) + ")"
    if policy.k == 1 and len(policy.children) > 1:
        return "(" + " OR ".join(policy_to_text(c) for c in policy.children) + ")"
    inner = ", ".join(policy_to_text(c) for c in policy.children)
    return f"THRESHOLD({policy.k}, {inner})"


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, msg: str):
        raise PolicySyntaxError(msg, self.pos)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek_word(self) -> str | None:
        self.skip_ws()
        m = _ATTR_RE.match(self.text, self.pos)
        return m.group(0) if m else None

    def take_word(self) -> str:
        word = self.peek_word()
        if word is None:
            self.error("expected attribute or keyword")
        self.pos += len(word)
        return word

    def expect(self, ch: str):
        self.skip_ws()
        if self.pos >= len(self.text) or self.text[self.pos] != ch:
            self.error(f"expected {ch!r}")
        self.pos += 1

    def at(self, ch: str) -> bool:
        self.skip_ws()
        return self.pos < len(self.text) and self.text[self.pos] == ch

    def parse(self) -> PolicyTree:
        node = self.parse_or()
        self.skip_ws()
        if self.pos != len(self.text):
            self.error("unexpected trailing input")
        return node

    def parse_or(self) -> PolicyTree:
        children = [self.parse_and()]
        while (w := self.peek_word()) and w.casefold() == "or":
            self.take_word()
            children.append(self.parse_and())
        if len(children) == 1:
            return children[0]
        return Threshold(1, tuple(children))

    def parse_and(self) -> PolicyTree:
        children = [self.parse_atom()]
        while (w := self.peek_word()) and w.casefold() == "and":
            self.take_word()
            children.append(self.parse_atom())
        if len(children) == 1:
            return children[0]
        return Threshold(len(children), tuple(children))

    def parse_atom(self) -> PolicyTree:
        if self.at("("):
            self.expect("(")
            node = self.parse_or()
            self.expect(")")
            return node
        start = self.pos
        word = self.take_word()
        lowered = word.casefold()
        if lowered == "threshold":
            self.expect("(")
            self.skip_ws()
            m = re.match(r"\d+", self.text[self.pos :])
            if not m:
                self.error("expected threshold count")
            k = int(m.group(0))
            self.pos += m.end()
            children = []
            while self.at(","):
                self.expect(",")
                children.append(self.parse_or())
            self.expect(")")
            if not children:
                self.error("threshold needs at least one child")
            if not (1 <= k <= len(children)):
                self.pos = start
                self.error(f"threshold k={k} out of range for {len(children)} children")
            return Threshold(k, tuple(children))
        if lowered in _KEYWORDS:
            self.pos = start
            self.error(f"keyword {word!r} where attribute expected")
        return Leaf(normalize_attribute(word))


def parse_policy(text: str) -> PolicyTree:
    if not text or not text.strip():
        raise PolicySyntaxError("empty policy", 0)
    return _Parser(text).parse()
