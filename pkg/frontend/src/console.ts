/**
 * Role-based view-models behind the console screens.  All state a screen
 * needs lives here so the rendering layer stays trivial; every security-
 * relevant action round-trips through the server before local state changes
 * (no optimistic updates).
 *
 * Key material stays inside the ConsoleSession and is wiped on logout; it is
 * never included in a request body.
 */

import { randomBytes } from "node:crypto";
import {
  PublicParams,
  UserKey,
  publicParamsFromBytes,
  userKeyFromBytes,
} from "./abe";
import { ApiClient, AlertRow, FileMeta, ReviewSummary } from "./client";
import { concat, fromB64, fromHex, toB64 } from "./bytes";
import { aesGcmOpen, aesGcmSeal, decrypt, documentFromBytes, documentToBytes, encrypt } from "./hybrid";
import { PolicyBuilder, PolicyTree } from "./policy";

export type UserKind = "patient" | "provider" | "reader" | "hospital" | string;

export class ConsoleSession {
  private key: UserKey | null = null;
  private keyBytes: Uint8Array | null = null;

  constructor(
    readonly client: ApiClient,
    readonly token: string,
    readonly userId: string,
    readonly brokerId: number,
    readonly kind: UserKind,
    readonly attributes: string[],
    readonly pp: PublicParams,
  ) {}

  /** Load the locally kept decryption key (e.g. from device storage). */
  loadKey(keyBytes: Uint8Array): void {
    this.keyBytes = keyBytes;
    this.key = userKeyFromBytes(keyBytes);
  }

  get userKey(): UserKey {
    if (!this.key) throw new Error("no decryption key loaded");
    return this.key;
  }

  get hasKey(): boolean {
    return this.key !== null;
  }

  /** Wipe key material; the session object keeps only public state. */
  logout(): void {
    if (this.keyBytes) this.keyBytes.fill(0);
    this.keyBytes = null;
    this.key = null;
  }
}

export async function openSession(
  client: ApiClient,
  username: string,
  password: string,
  opts: { kind?: UserKind; attributes?: string[]; keyBytes?: Uint8Array } = {},
): Promise<ConsoleSession> {
  const res = await client.login(username, password);
  const pp = publicParamsFromBytes(fromB64(res.public_params_b64));
  const session = new ConsoleSession(
    client,
    res.token,
    res.user_id,
    res.broker_id,
    opts.kind ?? "patient",
    opts.attributes ?? [],
    pp,
  );
  if (opts.keyBytes) session.loadKey(opts.keyBytes);
  return session;
}

// -- data-provider side ----------------------------------------------------

/**
 * Submit a record for patient review.  The payload is sealed under a fresh
 * transport key before it leaves the client, so the broker only relays an
 * opaque blob; the patient's review screen unseals it for preview.
 */
export async function dpSubmit(
  session: ConsoleSession,
  patientId: string,
  record: Uint8Array,
  targetFileId?: string,
): Promise<ReviewSummary> {
  const transportKey = new Uint8Array(randomBytes(32));
  const nonce = new Uint8Array(randomBytes(12));
  const sealed = concat(nonce, aesGcmSeal(transportKey, nonce, record));
  return session.client.submitUpload(session.token, {
    patient_id: patientId,
    payload_b64: toB64(sealed),
    transport_key_b64: toB64(transportKey),
    target_file_id: targetFileId,
  });
}

// -- patient side ----------------------------------------------------------

export interface ReviewQueueItem {
  review: ReviewSummary;
  /** Unsealed record for the patient's review screen. */
  preview: Uint8Array;
}

export async function reviewQueue(session: ConsoleSession): Promise<ReviewQueueItem[]> {
  const { reviews } = await session.client.reviews(session.token);
  return reviews.map((review) => {
    if (!review.payload_hex || !review.transport_key_hex) {
      throw new Error(`review ${review.review_id} arrived without payload`);
    }
    const sealed = fromHex(review.payload_hex);
    const key = fromHex(review.transport_key_hex);
    const preview = aesGcmOpen(key, sealed.slice(0, 12), sealed.slice(12));
    return { review, preview };
  });
}

export interface ApproveForm {
  /** Built policy; use PolicyBuilder — it refuses an empty policy. */
  policy: PolicyTree | PolicyBuilder;
  cloudIds: string[];
  threshold: number;
  /** Whether to add the break-glass emergency wrap. */
  emergencyAccess?: boolean;
}

/**
 * Approve a pending item: encrypt the reviewed record locally under the
 * patient's policy, then post the decision.  The server only ever sees the
 * ciphertext.
 */
export async function approveReview(
  session: ConsoleSession,
  item: ReviewQueueItem,
  form: ApproveForm,
): Promise<FileMeta> {
  const policy = form.policy instanceof PolicyBuilder ? form.policy.build() : form.policy;
  if (form.cloudIds.length === 0) throw new Error("pick at least one storage cloud");
  if (!(1 <= form.threshold && form.threshold <= form.cloudIds.length)) {
    throw new Error(`threshold ${form.threshold} out of range for ${form.cloudIds.length} clouds`);
  }
  const doc = encrypt(session.pp, policy, item.preview, {
    emergencyAccess: form.emergencyAccess ?? true,
  });
  const result = await session.client.decide(session.token, item.review.review_id, {
    decision: "approve",
    policy: doc.policyText,
    cloud_ids: form.cloudIds,
    threshold: form.threshold,
    ciphertext_b64: toB64(documentToBytes(doc)),
  });
  if (result.status !== "approved" || !result.file) {
    throw new Error(`server did not confirm approval: ${result.status}`);
  }
  return result.file;
}

export async function rejectReview(session: ConsoleSession, item: ReviewQueueItem): Promise<void> {
  const result = await session.client.decide(session.token, item.review.review_id, {
    decision: "reject",
  });
  if (result.status !== "rejected") {
    throw new Error(`server did not confirm rejection: ${result.status}`);
  }
}

// -- revocation panel ------------------------------------------------------

export interface RevocationPanel {
  revokeUser(userId: string, fileId?: string): Promise<void>;
  restoreUser(userId: string, fileId?: string): Promise<void>;
  revokeAttribute(attribute: string, fileId?: string): Promise<void>;
  restoreAttribute(attribute: string, fileId?: string): Promise<void>;
}

export function revocationPanel(session: ConsoleSession): RevocationPanel {
  const post = async (body: {
    target_user_id?: string;
    attribute?: string;
    file_id?: string;
    undo?: boolean;
  }) => {
    await session.client.revoke(session.token, body);
  };
  return {
    revokeUser: (userId, fileId) => post({ target_user_id: userId, file_id: fileId }),
    restoreUser: (userId, fileId) => post({ target_user_id: userId, file_id: fileId, undo: true }),
    revokeAttribute: (attribute, fileId) => post({ attribute, file_id: fileId }),
    restoreAttribute: (attribute, fileId) => post({ attribute, file_id: fileId, undo: true }),
  };
}

// -- alert panel -----------------------------------------------------------

export class AlertPanel {
  private acked = new Set<string>();

  constructor(readonly session: ConsoleSession) {}

  async refresh(): Promise<AlertRow[]> {
    const { alerts } = await this.session.client.alerts(this.session.token);
    return alerts;
  }

  async unacknowledged(): Promise<AlertRow[]> {
    return (await this.refresh()).filter((a) => !this.acked.has(a.alert_id));
  }

  acknowledge(alertId: string): void {
    this.acked.add(alertId);
  }
}

// -- data-reader side ------------------------------------------------------

/** Retrieve a file and decrypt it locally with the reader's own key. */
export async function drRetrieve(session: ConsoleSession, fileId: string): Promise<Uint8Array> {
  const { ciphertext_b64 } = await session.client.retrieveFile(session.token, fileId);
  const doc = documentFromBytes(fromB64(ciphertext_b64));
  return decrypt(session.pp, session.userKey, doc);
}

/** Ask the patient for access after a denial. */
export async function requestAccess(
  session: ConsoleSession,
  fileId: string,
  message: string,
): Promise<string> {
  const res = await session.client.requestAccess(session.token, fileId, message);
  return res.request_id;
}

export { PolicyBuilder } from "./policy";
