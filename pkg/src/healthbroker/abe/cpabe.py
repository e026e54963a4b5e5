"""Ciphertext-policy attribute-based encryption over the bundled pairing group.

Keys are bound to attribute sets; a ciphertext carries a policy tree and can
be opened exactly by keys whose attributes satisfy it.  Per-key issuance
randomness ties all components of one key together, so components from two
different keys cannot be mixed to widen access.

Only fixed-size group elements are encrypted here (the data-encryption key
of the hybrid layer); bulk data never touches the group.
"""

from __future__ import annotations

import hashlib
import secrets
import struct
import uuid
from dataclasses import dataclass

import gmpy2

from .pairing import Fp2, PairingGroup, Point, UnsupportedLevel
from .policy import (
    Leaf,
    PolicyTree,
    Threshold,
    normalize_attributes,
    parse_policy,
    policy_to_text,
    satisfies,
)

__all__ = [
    "PublicParams",
    "MasterSecret",
    "UserKey",
    "AbeCiphertext",
    "NotSatisfied",
    "setup",
    "keygen",
    "encrypt_element",
    "decrypt_element",
    "random_gt_element",
    "DeterministicRng",
]


class NotSatisfied(Exception):
    """Key attributes do not satisfy the ciphertext policy."""


class DeterministicRng:
    """SHA-256 counter stream; test hook for reproducible setup/keygen."""

    def __init__(self, seed: bytes | str):
        if isinstance(seed, str):
            seed = seed.encode()
        self._seed = seed
        self._counter = 0

    def randbelow(self, bound: int) -> int:
        nbytes = (bound.bit_length() + 7) // 8 + 8
        while True:
            out = b""
            while len(out) < nbytes:
                out += hashlib.sha256(
                    self._seed + self._counter.to_bytes(8, "big")
                ).digest()
                self._counter += 1
            val = int.from_bytes(out[:nbytes], "big") % bound
            if val:
                return val

    def token_bytes(self, n: int) -> bytes:
        out = b""
        while len(out) < n:
            out += hashlib.sha256(self._seed + b"tok" + self._counter.to_bytes(8, "big")).digest()
            self._counter += 1
        return out[:n]


class _SystemRng:
    @staticmethod
    def randbelow(bound: int) -> int:
        while True:
            v = secrets.randbelow(bound)
            if v:
                return v

    @staticmethod
    def token_bytes(n: int) -> bytes:
        return secrets.token_bytes(n)


@dataclass(frozen=True)
class PublicParams:
    level: int
    pub: Point            # g^beta
    e_gg_alpha: Fp2

    @property
    def group(self) -> PairingGroup:
        return _group(self.level)

    def to_bytes(self) -> bytes:
        G = self.group
        return (
            b"HABP\x01"
            + struct.pack(">H", self.level)
            + G.point_to_bytes(self.pub)
            + G.gt_to_bytes(self.e_gg_alpha)
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "PublicParams":
        if data[:5] != b"HABP\x01":
            raise ValueError("bad public-params encoding")
        (level,) = struct.unpack(">H", data[5:7])
        G = _group(level)
        off = 7
        pub = G.point_from_bytes(data[off : off + G.nbytes + 1])
        off += G.nbytes + 1
        e = G.gt_from_bytes(data[off : off + 2 * G.nbytes])
        return cls(level, pub, e)


@dataclass(frozen=True)
class MasterSecret:
    level: int
    beta: object
    g_alpha: Point

    def to_bytes(self) -> bytes:
        G = _group(self.level)
        return (
            b"HABM\x01"
            + struct.pack(">H", self.level)
            + int(self.beta).to_bytes(G.nbytes, "big")
            + G.point_to_bytes(self.g_alpha)
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "MasterSecret":
        if data[:5] != b"HABM\x01":
            raise ValueError("bad master-secret encoding")
        (level,) = struct.unpack(">H", data[5:7])
        G = _group(level)
        off = 7
        beta = gmpy2.mpz(int.from_bytes(data[off : off + G.nbytes], "big"))
        off += G.nbytes
        return cls(level, beta, G.point_from_bytes(data[off : off + G.nbytes + 1]))


@dataclass(frozen=True)
class UserKey:
    level: int
    key_id: str
    attributes: frozenset[str]
    d: Point                              # g^((alpha+r)/beta)
    comps: dict                           # attr -> (g^r * H(attr)^r_j, g^r_j)

    def to_bytes(self) -> bytes:
        G = _group(self.level)
        out = [b"HABK\x01", struct.pack(">H", self.level)]
        kid = uuid.UUID(self.key_id).bytes
        out.append(kid)
        out.append(G.point_to_bytes(self.d))
        attrs = sorted(self.attributes)
        out.append(struct.pack(">H", len(attrs)))
        for a in attrs:
            ab = a.encode()
            dj, dpj = self.comps[a]
            out.append(struct.pack(">H", len(ab)) + ab)
            out.append(G.point_to_bytes(dj))
            out.append(G.point_to_bytes(dpj))
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "UserKey":
        if data[:5] != b"HABK\x01":
            raise ValueError("bad user-key encoding")
        (level,) = struct.unpack(">H", data[5:7])
        G = _group(level)
        plen = G.nbytes + 1
        off = 7
        key_id = str(uuid.UUID(bytes=data[off : off + 16]))
        off += 16
        d = G.point_from_bytes(data[off : off + plen])
        off += plen
        (count,) = struct.unpack(">H", data[off : off + 2])
        off += 2
        comps = {}
        for _ in range(count):
            (alen,) = struct.unpack(">H", data[off : off + 2])
            off += 2
            attr = data[off : off + alen].decode()
            off += alen
            dj = G.point_from_bytes(data[off : off + plen])
            off += plen
            dpj = G.point_from_bytes(data[off : off + plen])
            off += plen
            comps[attr] = (dj, dpj)
        return cls(level, key_id, frozenset(comps), d, comps)


@dataclass(frozen=True)
class AbeCiphertext:
    level: int
    policy: PolicyTree
    c_tilde: Fp2                          # M * e(g,g)^(alpha*s)
    c: Point                              # (g^beta)^s
    leaves: tuple                         # preorder: (C_y, C'_y) per leaf

    def to_bytes(self) -> bytes:
        G = _group(self.level)
        ptext = policy_to_text(self.policy).encode()
        out = [
            b"HABC\x01",
            struct.pack(">H", self.level),
            struct.pack(">H", len(ptext)),
            ptext,
            G.gt_to_bytes(self.c_tilde),
            G.point_to_bytes(self.c),
            struct.pack(">H", len(self.leaves)),
        ]
        for cy, cpy in self.leaves:
            out.append(G.point_to_bytes(cy))
            out.append(G.point_to_bytes(cpy))
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "AbeCiphertext":
        if data[:5] != b"HABC\x01":
            raise ValueError("bad ciphertext encoding")
        (level,) = struct.unpack(">H", data[5:7])
        G = _group(level)
        plen = G.nbytes + 1
        off = 7
        (tlen,) = struct.unpack(">H", data[off : off + 2])
        off += 2
        policy = parse_policy(data[off : off + tlen].decode())
        off += tlen
        c_tilde = G.gt_from_bytes(data[off : off + 2 * G.nbytes])
        off += 2 * G.nbytes
        c = G.point_from_bytes(data[off : off + plen])
        off += plen
        (count,) = struct.unpack(">H", data[off : off + 2])
        off += 2
        leaves = []
        for _ in range(count):
            cy = G.point_from_bytes(data[off : off + plen])
            off += plen
            cpy = G.point_from_bytes(data[off : off + plen])
            off += plen
            leaves.append((cy, cpy))
        return cls(level, policy, c_tilde, c, tuple(leaves))


_groups: dict[int, PairingGroup] = {}


def _group(level: int) -> PairingGroup:
    if level not in _groups:
        _groups[level] = PairingGroup(level)
    return _groups[level]


def setup(security_level: int = 128, rng=None) -> tuple[PublicParams, MasterSecret]:
    """Fresh parameter pair; PublicParams alone cannot derive any key."""
    try:
        G = _group(security_level)
    except UnsupportedLevel:
        raise
    rng = rng or _SystemRng()
    alpha = rng.randbelow(int(G.q))
    beta = rng.randbelow(int(G.q))
    pub = G.mul(G.g, beta)
    e_gg_alpha = G.fp2_pow(G.gt_generator(), alpha)
    return (
        PublicParams(security_level, pub, e_gg_alpha),
        MasterSecret(security_level, gmpy2.mpz(beta), G.mul(G.g, alpha)),
    )


def keygen(msk: MasterSecret, attrs, rng=None) -> UserKey:
    """Issue a key for an attribute set; fresh randomness per call."""
    attrs = normalize_attributes(attrs)
    G = _group(msk.level)
    rng = rng or _SystemRng()
    r = rng.randbelow(int(G.q))
    beta_inv = gmpy2.invert(msk.beta, G.q)
    d = G.mul(G.add(msk.g_alpha, G.mul(G.g, r)), beta_inv)
    g_r = G.mul(G.g, r)
    comps = {}
    for attr in sorted(attrs):
        rj = rng.randbelow(int(G.q))
        h_attr = G.hash_to_point(attr.encode())
        comps[attr] = (G.add(g_r, G.mul(h_attr, rj)), G.mul(G.g, rj))
    key_id = str(uuid.UUID(bytes=rng.token_bytes(16), version=4))
    return UserKey(msk.level, key_id, attrs, d, comps)


def _leaves_preorder(policy: PolicyTree):
    if isinstance(policy, Leaf):
        yield policy
    else:
        for child in policy.children:
            yield from _leaves_preorder(child)


def _share_secret(G: PairingGroup, policy: PolicyTree, secret, rng) -> list:
    """Per-leaf shares of ``secret`` following the tree's threshold gates."""
    shares = []

    def walk(node, value):
        if isinstance(node, Leaf):
            shares.append(value)
            return
        coeffs = [value] + [gmpy2.mpz(rng.randbelow(int(G.q))) for _ in range(node.k - 1)]
        for idx, child in enumerate(node.children, start=1):
            y = gmpy2.mpz(0)
            xpow = gmpy2.mpz(1)
            for c in coeffs:
                y = (y + c * xpow) % G.q
                xpow = xpow * idx % G.q
            walk(child, y)

    walk(policy, gmpy2.mpz(secret))
    return shares


def random_gt_element(pp: PublicParams, rng=None):
    """Uniform element of the target group, with its scalar discarded."""
    rng = rng or _SystemRng()
    G = pp.group
    return G.fp2_pow(G.gt_generator(), rng.randbelow(int(G.q)))


def encrypt_element(pp: PublicParams, policy: PolicyTree, message: Fp2, rng=None) -> AbeCiphertext:
    """Encrypt one target-group element under a policy tree."""
    G = pp.group
    rng = rng or _SystemRng()
    s = rng.randbelow(int(G.q))
    c_tilde = G.fp2_mul(message, G.fp2_pow(pp.e_gg_alpha, s))
    c = G.mul(pp.pub, s)
    shares = _share_secret(G, policy, s, rng)
    leaves = []
    for leaf, share in zip(_leaves_preorder(policy), shares):
        h_attr = G.hash_to_point(leaf.attribute.encode())
        leaves.append((G.mul(G.g, share), G.mul(h_attr, share)))
    return AbeCiphertext(pp.level, policy, c_tilde, c, tuple(leaves))


def _pick_leaves(policy: PolicyTree, attrs, q) -> dict | None:
    """Map leaf preorder index -> Lagrange coefficient for one satisfying subset."""
    counter = [-1]

    def walk(node):
        if isinstance(node, Leaf):
            counter[0] += 1
            idx = counter[0]
            return {idx: gmpy2.mpz(1)} if node.attribute in attrs else None
        sat = []
        for child_index, child in enumerate(node.children, start=1):
            res = walk(child)
            if res is not None:
                sat.append((child_index, res))
        if len(sat) < node.k:
            return None
        chosen = sat[: node.k]
        xs = [ci for ci, _ in chosen]
        out = {}
        for ci, leafmap in chosen:
            num, den = gmpy2.mpz(1), gmpy2.mpz(1)
            for xj in xs:
                if xj == ci:
                    continue
                num = num * (-xj) % q
                den = den * (ci - xj) % q
            lam = num * gmpy2.invert(den, q) % q
            for leaf_idx, coeff in leafmap.items():
                out[leaf_idx] = coeff * lam % q
        return out

    # walk must visit every leaf to keep preorder indices aligned
    return walk(policy)


def decrypt_element(pp: PublicParams, key: UserKey, ct: AbeCiphertext) -> Fp2:
    """Recover the encrypted element; raises NotSatisfied otherwise."""
    if key.level != ct.level or pp.level != ct.level:
        raise ValueError("mismatched security levels")
    G = pp.group
    picked = _pick_leaves(ct.policy, key.attributes, G.q)
    if picked is None:
        raise NotSatisfied("key attributes do not satisfy the ciphertext policy")
    leaves = list(_leaves_preorder(ct.policy))
    acc = G.gt_one()
    for leaf_idx, coeff in picked.items():
        attr = leaves[leaf_idx].attribute
        dj, dpj = key.comps[attr]
        cy, cpy = ct.leaves[leaf_idx]
        num = G.pair(dj, cy)
        den = G.pair(dpj, cpy)
        val = G.fp2_mul(num, G.fp2_inv(den))      # e(g,g)^(r * share)
        acc = G.fp2_mul(acc, G.fp2_pow(val, coeff))
    e_c_d = G.pair(ct.c, key.d)                   # e(g,g)^(s * (alpha + r))
    return G.fp2_mul(ct.c_tilde, G.fp2_mul(acc, G.fp2_inv(e_c_d)))
