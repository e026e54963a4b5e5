/**
 * Hybrid document crypto: attribute-wrapped DEK + AES-256-GCM body, in the
 * service's versioned "HABD" wire format.  Encryption runs on approval in
 * the patient's client; decryption runs on retrieval in the reader's client.
 */

import { createCipheriv, createDecipheriv, createHash, randomUUID } from "node:crypto";
import {
  bytesEqual,
  concat,
  fromUtf8,
  readU16be,
  readU32be,
  u16be,
  u32be,
  utf8,
  uuidFromBytes,
  uuidToBytes,
} from "./bytes";
import {
  AbeCiphertext,
  NotSatisfied,
  PublicParams,
  Rng,
  SystemRng,
  UserKey,
  ciphertextFromBytes,
  ciphertextToBytes,
  decryptElement,
  encryptElement,
  randomGtElement,
} from "./abe";
import { Fp2, group } from "./pairing";
import { PolicyTree, leaf, policyToText } from "./policy";

export const EMERGENCY_ATTRIBUTE = "emergency_room";

const MAGIC = utf8("HABD");
const VERSION = 1;

export class IntegrityFailure extends Error {}

export interface EncryptedDocument {
  docId: string;
  policyText: string;
  wrappedDek: AbeCiphertext;
  emergencyDek: AbeCiphertext | null;
  nonce: Uint8Array;
  body: Uint8Array;
}

export function documentToBytes(doc: EncryptedDocument): Uint8Array {
  const ptext = utf8(doc.policyText);
  const wrapped = ciphertextToBytes(doc.wrappedDek);
  const emergency = doc.emergencyDek ? ciphertextToBytes(doc.emergencyDek) : new Uint8Array(0);
  return concat(
    MAGIC,
    new Uint8Array([VERSION]),
    uuidToBytes(doc.docId),
    u16be(ptext.length),
    ptext,
    u32be(wrapped.length),
    wrapped,
    u32be(emergency.length),
    emergency,
    doc.nonce,
    doc.body,
  );
}

export function documentFromBytes(data: Uint8Array): EncryptedDocument {
  if (!bytesEqual(data.slice(0, 4), MAGIC)) throw new Error("bad document magic");
  if (data[4] !== VERSION) throw new Error(`unsupported document version ${data[4]}`);
  let off = 5;
  const docId = uuidFromBytes(data.slice(off, off + 16));
  off += 16;
  const plen = readU16be(data, off);
  off += 2;
  const policyText = fromUtf8(data.slice(off, off + plen));
  off += plen;
  const wlen = readU32be(data, off);
  off += 4;
  const wrappedDek = ciphertextFromBytes(data.slice(off, off + wlen));
  off += wlen;
  const elen = readU32be(data, off);
  off += 4;
  const emergencyDek = elen ? ciphertextFromBytes(data.slice(off, off + elen)) : null;
  off += elen;
  const nonce = data.slice(off, off + 12);
  off += 12;
  return { docId, policyText, wrappedDek, emergencyDek, nonce, body: data.slice(off) };
}

function deriveDek(pp: PublicParams, element: Fp2): Uint8Array {
  const h = createHash("sha256");
  h.update(utf8("dek"));
  h.update(group(pp.level).gtToBytes(element));
  return new Uint8Array(h.digest());
}

export function aesGcmSeal(key: Uint8Array, nonce: Uint8Array, plaintext: Uint8Array): Uint8Array {
  const cipher = createCipheriv("aes-256-gcm", key, nonce);
  const head = cipher.update(plaintext);
  const tail = cipher.final();
  return concat(new Uint8Array(head), new Uint8Array(tail), new Uint8Array(cipher.getAuthTag()));
}

export function aesGcmOpen(key: Uint8Array, nonce: Uint8Array, sealed: Uint8Array): Uint8Array {
  if (sealed.length < 16) throw new IntegrityFailure("sealed payload too short");
  const tag = sealed.slice(sealed.length - 16);
  const body = sealed.slice(0, sealed.length - 16);
  const decipher = createDecipheriv("aes-256-gcm", key, nonce);
  decipher.setAuthTag(tag);
  try {
    const head = decipher.update(body);
    const tail = decipher.final();
    return concat(new Uint8Array(head), new Uint8Array(tail));
  } catch {
    throw new IntegrityFailure("payload failed authentication");
  }
}

export interface EncryptOptions {
  emergencyAccess?: boolean;
  rng?: Rng;
  docId?: string;
}

/** Encrypt a document under a policy; DEK and nonce are fresh per call. */
export function encrypt(
  pp: PublicParams,
  policy: PolicyTree,
  plaintext: Uint8Array,
  opts: EncryptOptions = {},
): EncryptedDocument {
  if (plaintext.length === 0) throw new Error("plaintext must be non-empty");
  const { emergencyAccess = true, rng } = opts;
  const element = randomGtElement(pp, rng);
  const dek = deriveDek(pp, element);
  const wrapped = encryptElement(pp, policy, element, rng);
  const emergency = emergencyAccess
    ? encryptElement(pp, leaf(EMERGENCY_ATTRIBUTE), element, rng)
    : null;
  const nonce = (rng ?? new SystemRng()).tokenBytes(12);
  const body = aesGcmSeal(dek, nonce, plaintext);
  return {
    docId: opts.docId ?? randomUUID(),
    policyText: policyToText(policy),
    wrappedDek: wrapped,
    emergencyDek: emergency,
    nonce,
    body,
  };
}

function openBody(pp: PublicParams, element: Fp2, doc: EncryptedDocument): Uint8Array {
  return aesGcmOpen(deriveDek(pp, element), doc.nonce, doc.body);
}

/** Plaintext iff the key satisfies the document policy; body authenticated. */
export function decrypt(pp: PublicParams, key: UserKey, doc: EncryptedDocument): Uint8Array {
  const element = decryptElement(pp, key, doc.wrappedDek);
  return openBody(pp, element, doc);
}

/** Break-glass path: open via the emergency wrap, if the patient allowed one. */
export function decryptEmergency(pp: PublicParams, key: UserKey, doc: EncryptedDocument): Uint8Array {
  if (doc.emergencyDek === null) throw new NotSatisfied("document has no emergency wrap");
  const element = decryptElement(pp, key, doc.emergencyDek);
  return openBody(pp, element, doc);
}
