/**
 * Ciphertext-policy attribute-based encryption client side.
 *
 * Mirrors the service's scheme and wire formats exactly ("HABP" public
 * params, "HABK" user keys, "HABC" element ciphertexts) so material issued
 * by the server round-trips through this module byte-for-byte.  The console
 * only ever parses keys — issuance stays on the server — but performs
 * encryption and decryption locally.
 */

import { createHash, randomBytes } from "node:crypto";
import {
  bigToBytes,
  bytesEqual,
  bytesToBig,
  concat,
  fromUtf8,
  readU16be,
  u16be,
  utf8,
  uuidFromBytes,
  uuidToBytes,
} from "./bytes";
import { Fp2, MaybePoint, PairingGroup, group } from "./pairing";
import { Leaf, PolicyTree, parsePolicy, policyToText } from "./policy";

export interface Rng {
  randbelow(bound: bigint): bigint;
  tokenBytes(n: number): Uint8Array;
}

/** SHA-256 counter stream; reproduces the server's deterministic test RNG. */
export class DeterministicRng implements Rng {
  private seed: Uint8Array;
  private counter = 0n;

  constructor(seed: string | Uint8Array) {
    this.seed = typeof seed === "string" ? utf8(seed) : seed;
  }

  private block(extra: Uint8Array): Uint8Array {
    const h = createHash("sha256");
    h.update(this.seed);
    h.update(extra);
    h.update(bigToBytes(this.counter, 8));
    this.counter += 1n;
    return new Uint8Array(h.digest());
  }

  randbelow(bound: bigint): bigint {
    const nbytes = Math.ceil(bound.toString(2).length / 8) + 8;
    for (;;) {
      const chunks: Uint8Array[] = [];
      let len = 0;
      while (len < nbytes) {
        const b = this.block(new Uint8Array(0));
        chunks.push(b);
        len += b.length;
      }
      const val = bytesToBig(concat(...chunks).slice(0, nbytes)) % bound;
      if (val !== 0n) return val;
    }
  }

  tokenBytes(n: number): Uint8Array {
    const chunks: Uint8Array[] = [];
    let len = 0;
    while (len < n) {
      const b = this.block(utf8("tok"));
      chunks.push(b);
      len += b.length;
    }
    return concat(...chunks).slice(0, n);
  }
}

export class SystemRng implements Rng {
  randbelow(bound: bigint): bigint {
    const nbytes = Math.ceil(bound.toString(2).length / 8) + 8;
    for (;;) {
      const val = bytesToBig(new Uint8Array(randomBytes(nbytes))) % bound;
      if (val !== 0n) return val;
    }
  }

  tokenBytes(n: number): Uint8Array {
    return new Uint8Array(randomBytes(n));
  }
}

export class NotSatisfied extends Error {}

export interface PublicParams {
  level: number;
  pub: MaybePoint; // g^beta
  eGgAlpha: Fp2;
}

export interface UserKey {
  level: number;
  keyId: string;
  attributes: Set<string>;
  d: MaybePoint; // g^((alpha+r)/beta)
  comps: Map<string, [MaybePoint, MaybePoint]>; // attr -> (g^r * H(attr)^r_j, g^r_j)
}

export interface AbeCiphertext {
  level: number;
  policy: PolicyTree;
  cTilde: Fp2; // M * e(g,g)^(alpha*s)
  c: MaybePoint; // (g^beta)^s
  leaves: Array<[MaybePoint, MaybePoint]>; // preorder: (C_y, C'_y) per leaf
}

const MAGIC_PP = utf8("HABP\x01");
const MAGIC_KEY = utf8("HABK\x01");
const MAGIC_CT = utf8("HABC\x01");

function checkMagic(data: Uint8Array, magic: Uint8Array, what: string): number {
  if (data.length < magic.length + 2 || !bytesEqual(data.slice(0, magic.length), magic)) {
    throw new Error(`bad ${what} encoding`);
  }
  return readU16be(data, magic.length);
}

export function publicParamsFromBytes(data: Uint8Array): PublicParams {
  const level = checkMagic(data, MAGIC_PP, "public-params");
  const G = group(level);
  let off = 7;
  const pub = G.pointFromBytes(data.slice(off, off + G.nbytes + 1));
  off += G.nbytes + 1;
  const eGgAlpha = G.gtFromBytes(data.slice(off, off + 2 * G.nbytes));
  return { level, pub, eGgAlpha };
}

export function publicParamsToBytes(pp: PublicParams): Uint8Array {
  const G = group(pp.level);
  return concat(MAGIC_PP, u16be(pp.level), G.pointToBytes(pp.pub), G.gtToBytes(pp.eGgAlpha));
}

export function userKeyFromBytes(data: Uint8Array): UserKey {
  const level = checkMagic(data, MAGIC_KEY, "user-key");
  const G = group(level);
  const plen = G.nbytes + 1;
  let off = 7;
  const keyId = uuidFromBytes(data.slice(off, off + 16));
  off += 16;
  const d = G.pointFromBytes(data.slice(off, off + plen));
  off += plen;
  const count = readU16be(data, off);
  off += 2;
  const comps = new Map<string, [MaybePoint, MaybePoint]>();
  for (let i = 0; i < count; i++) {
    const alen = readU16be(data, off);
    off += 2;
    const attr = fromUtf8(data.slice(off, off + alen));
    off += alen;
    const dj = G.pointFromBytes(data.slice(off, off + plen));
    off += plen;
    const dpj = G.pointFromBytes(data.slice(off, off + plen));
    off += plen;
    comps.set(attr, [dj, dpj]);
  }
  return { level, keyId, attributes: new Set(comps.keys()), d, comps };
}

export function userKeyToBytes(key: UserKey): Uint8Array {
  const G = group(key.level);
  const parts: Uint8Array[] = [MAGIC_KEY, u16be(key.level), uuidToBytes(key.keyId), G.pointToBytes(key.d)];
  const attrs = [...key.attributes].sort();
  parts.push(u16be(attrs.length));
  for (const a of attrs) {
    const comp = key.comps.get(a);
    if (!comp) throw new Error(`missing key component for ${a}`);
    const ab = utf8(a);
    parts.push(u16be(ab.length), ab, G.pointToBytes(comp[0]), G.pointToBytes(comp[1]));
  }
  return concat(...parts);
}

export function ciphertextToBytes(ct: AbeCiphertext): Uint8Array {
  const G = group(ct.level);
  const ptext = utf8(policyToText(ct.policy));
  const parts: Uint8Array[] = [
    MAGIC_CT,
    u16be(ct.level),
    u16be(ptext.length),
    ptext,
    G.gtToBytes(ct.cTilde),
    G.pointToBytes(ct.c),
    u16be(ct.leaves.length),
  ];
  for (const [cy, cpy] of ct.leaves) {
    parts.push(G.pointToBytes(cy), G.pointToBytes(cpy));
  }
  return concat(...parts);
}

export function ciphertextFromBytes(data: Uint8Array): AbeCiphertext {
  const level = checkMagic(data, MAGIC_CT, "ciphertext");
  const G = group(level);
  const plen = G.nbytes + 1;
  let off = 7;
  const tlen = readU16be(data, off);
  off += 2;
  const policy = parsePolicy(fromUtf8(data.slice(off, off + tlen)));
  off += tlen;
  const cTilde = G.gtFromBytes(data.slice(off, off + 2 * G.nbytes));
  off += 2 * G.nbytes;
  const c = G.pointFromBytes(data.slice(off, off + plen));
  off += plen;
  const count = readU16be(data, off);
  off += 2;
  const leaves: Array<[MaybePoint, MaybePoint]> = [];
  for (let i = 0; i < count; i++) {
    const cy = G.pointFromBytes(data.slice(off, off + plen));
    off += plen;
    const cpy = G.pointFromBytes(data.slice(off, off + plen));
    off += plen;
    leaves.push([cy, cpy]);
  }
  return { level, policy, cTilde, c, leaves };
}

function* leavesPreorder(policy: PolicyTree): Generator<Leaf> {
  if (policy.kind === "leaf") {
    yield policy;
  } else {
    for (const child of policy.children) yield* leavesPreorder(child);
  }
}

/** Per-leaf shares of `secret` following the tree's threshold gates. */
function shareSecret(G: PairingGroup, policy: PolicyTree, secret: bigint, rng: Rng): bigint[] {
  const shares: bigint[] = [];
  const walk = (node: PolicyTree, value: bigint) => {
    if (node.kind === "leaf") {
      shares.push(value);
      return;
    }
    const coeffs = [value];
    for (let i = 0; i < node.k - 1; i++) coeffs.push(rng.randbelow(G.q));
    node.children.forEach((child, i) => {
      const idx = BigInt(i + 1);
      let y = 0n;
      let xpow = 1n;
      for (const c of coeffs) {
        y = (y + c * xpow) % G.q;
        xpow = (xpow * idx) % G.q;
      }
      walk(child, y);
    });
  };
  walk(policy, secret % G.q);
  return shares;
}

/** Uniform element of the target group, with its scalar discarded. */
export function randomGtElement(pp: PublicParams, rng?: Rng): Fp2 {
  const G = group(pp.level);
  return G.fp2Pow(G.gtGenerator(), (rng ?? new SystemRng()).randbelow(G.q));
}

export function encryptElement(pp: PublicParams, policy: PolicyTree, message: Fp2, rng?: Rng): AbeCiphertext {
  const G = group(pp.level);
  const r = rng ?? new SystemRng();
  const s = r.randbelow(G.q);
  const cTilde = G.fp2Mul(message, G.fp2Pow(pp.eGgAlpha, s));
  const c = G.mul(pp.pub, s);
  const shares = shareSecret(G, policy, s, r);
  const leaves: Array<[MaybePoint, MaybePoint]> = [];
  let i = 0;
  for (const lf of leavesPreorder(policy)) {
    const hAttr = G.hashToPoint(utf8(lf.attribute));
    const share = shares[i++];
    leaves.push([G.mul(G.g, share), G.mul(hAttr, share)]);
  }
  return { level: pp.level, policy, cTilde, c, leaves };
}

function modInvQ(a: bigint, q: bigint): bigint {
  let [old_r, r] = [((a % q) + q) % q, q];
  let [old_s, s] = [1n, 0n];
  while (r !== 0n) {
    const quo = old_r / r;
    [old_r, r] = [r, old_r - quo * r];
    [old_s, s] = [s, old_s - quo * s];
  }
  return ((old_s % q) + q) % q;
}

/** Map leaf preorder index -> Lagrange coefficient for one satisfying subset. */
function pickLeaves(policy: PolicyTree, attrs: Set<string>, q: bigint): Map<number, bigint> | null {
  let counter = -1;
  const walk = (node: PolicyTree): Map<number, bigint> | null => {
    if (node.kind === "leaf") {
      counter++;
      return attrs.has(node.attribute) ? new Map([[counter, 1n]]) : null;
    }
    const sat: Array<[bigint, Map<number, bigint>]> = [];
    node.children.forEach((child, i) => {
      // every child is visited so preorder indices stay aligned
      const res = walk(child);
      if (res !== null) sat.push([BigInt(i + 1), res]);
    });
    if (sat.length < node.k) return null;
    const chosen = sat.slice(0, node.k);
    const xs = chosen.map(([ci]) => ci);
    const out = new Map<number, bigint>();
    for (const [ci, leafmap] of chosen) {
      let num = 1n;
      let den = 1n;
      for (const xj of xs) {
        if (xj === ci) continue;
        num = (((num * -xj) % q) + q) % q;
        den = (((den * (ci - xj)) % q) + q) % q;
      }
      const lam = (num * modInvQ(den, q)) % q;
      for (const [leafIdx, coeff] of leafmap) {
        out.set(leafIdx, (coeff * lam) % q);
      }
    }
    return out;
  };
  return walk(policy);
}

/** Recover the encrypted element; throws NotSatisfied otherwise. */
export function decryptElement(pp: PublicParams, key: UserKey, ct: AbeCiphertext): Fp2 {
  if (key.level !== ct.level || pp.level !== ct.level) {
    throw new Error("mismatched security levels");
  }
  const G = group(pp.level);
  const picked = pickLeaves(ct.policy, key.attributes, G.q);
  if (picked === null) {
    throw new NotSatisfied("key attributes do not satisfy the ciphertext policy");
  }
  const leaves = [...leavesPreorder(ct.policy)];
  let acc = G.gtOne();
  for (const [leafIdx, coeff] of picked) {
    const attr = leaves[leafIdx].attribute;
    const comp = key.comps.get(attr);
    if (!comp) throw new NotSatisfied(`missing component for ${attr}`);
    const [dj, dpj] = comp;
    const [cy, cpy] = ct.leaves[leafIdx];
    const num = G.pair(dj, cy);
    const den = G.pair(dpj, cpy);
    const val = G.fp2Mul(num, G.fp2Inv(den)); // e(g,g)^(r * share)
    acc = G.fp2Mul(acc, G.fp2Pow(val, coeff));
  }
  const eCD = G.pair(ct.c, key.d); // e(g,g)^(s * (alpha + r))
  return G.fp2Mul(ct.cTilde, G.fp2Mul(acc, G.fp2Inv(eCD)));
}
