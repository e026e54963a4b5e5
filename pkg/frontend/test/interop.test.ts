/**
 * Byte-level interop with the service's crypto, pinned by fixtures produced
 * from the Python package (test/fixtures/generate.py).  Every layer is
 * checked separately so a mismatch points at the broken primitive, not just
 * "documents differ".
 */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";
import {
  DeterministicRng,
  NotSatisfied,
  decryptElement,
  encryptElement,
  ciphertextToBytes,
  publicParamsFromBytes,
  userKeyFromBytes,
  userKeyToBytes,
} from "../src/abe";
import { bytesEqual, fromB64, toB64, utf8 } from "../src/bytes";
import { decrypt, documentFromBytes, documentToBytes, encrypt } from "../src/hybrid";
import { group } from "../src/pairing";
import { parsePolicy } from "../src/policy";

const here = dirname(fileURLToPath(import.meta.url));
const fx = JSON.parse(readFileSync(join(here, "fixtures", "interop.json"), "utf-8"));

const G = group(fx.level);
const pp = publicParamsFromBytes(fromB64(fx.pp_b64));
const key = userKeyFromBytes(fromB64(fx.user_key_b64));

describe("deterministic rng", () => {
  it("matches the server stream", () => {
    const rng = new DeterministicRng(fx.det_rng.seed);
    expect(rng.randbelow(G.q).toString()).toBe(fx.det_rng.first_randbelow_q);
    expect(toB64(rng.tokenBytes(12))).toBe(fx.det_rng.token_bytes_12_b64);
  });
});

describe("pairing group", () => {
  it("hashes labels to the same points", () => {
    for (const [label, expected] of Object.entries(fx.hash_to_point as Record<string, string>)) {
      const P = G.hashToPoint(utf8(label));
      expect(G.onCurve(P)).toBe(true);
      expect(toB64(G.pointToBytes(P))).toBe(expected);
    }
  });

  it("computes the same e(g, g)", () => {
    expect(toB64(G.gtToBytes(G.gtGenerator()))).toBe(fx.gt_generator_b64);
  });

  it("is bilinear", () => {
    const a = 982451653n;
    const b = 57885161n;
    const lhs = G.pair(G.mul(G.g, a), G.mul(G.g, b));
    const rhs = G.fp2Pow(G.gtGenerator(), a * b);
    expect(G.fp2Eq(lhs, rhs)).toBe(true);
  });

  it("round-trips point compression", () => {
    const P = G.mul(G.g, 123456789n);
    const back = G.pointFromBytes(G.pointToBytes(P));
    expect(back).toEqual(P);
  });
});

describe("attribute-layer interop", () => {
  it("re-encrypts an element to identical bytes under the same seed", () => {
    const policy = parsePolicy(fx.policy_text);
    const ct = encryptElement(pp, policy, G.gtGenerator(), new DeterministicRng(fx.elem_ct_seed));
    expect(toB64(ciphertextToBytes(ct))).toBe(fx.elem_ct_b64);
  });

  it("re-serializes the issued user key byte-for-byte", () => {
    expect(toB64(userKeyToBytes(key))).toBe(fx.user_key_b64);
  });

  it("decrypts the server-made document's wrapped element", () => {
    const doc = documentFromBytes(fromB64(fx.doc_b64));
    const element = decryptElement(pp, key, doc.wrappedDek);
    expect(toB64(G.gtToBytes(element))).toBe(fx.element_b64);
  });

  it("refuses a key that misses the policy", () => {
    const doc = documentFromBytes(fromB64(fx.doc_b64));
    const partial = { ...key, attributes: new Set(["doctor"]) };
    expect(() => decryptElement(pp, partial, doc.wrappedDek)).toThrow(NotSatisfied);
  });
});

describe("document interop", () => {
  it("re-encrypts the full document to identical bytes under the same seed", () => {
    const doc = encrypt(pp, parsePolicy(fx.policy_text), fromB64(fx.plaintext_b64), {
      rng: new DeterministicRng(fx.doc_seed),
      docId: fx.doc_id,
    });
    expect(toB64(documentToBytes(doc))).toBe(fx.doc_b64);
  });

  it("decrypts the server-made document", () => {
    const doc = documentFromBytes(fromB64(fx.doc_b64));
    const plain = decrypt(pp, key, doc);
    expect(bytesEqual(plain, fromB64(fx.plaintext_b64))).toBe(true);
  });

  it("rejects a tampered body", () => {
    const raw = fromB64(fx.doc_b64);
    raw[raw.length - 1] ^= 0x01;
    const doc = documentFromBytes(raw);
    expect(() => decrypt(pp, key, doc)).toThrow(/authentication/);
  });
});
