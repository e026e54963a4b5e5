/**
 * Full console workflow against a live service: the patient reviews and
 * approves a submission with the policy builder, a reader retrieves and
 * decrypts locally, revocation locks the reader out immediately, and a
 * tampered action log surfaces as an alert in the patient's panel.  The
 * recording proxy then proves no plaintext or private-key bytes ever left
 * the client in a request body.
 */

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import {
  AlertPanel,
  ConsoleSession,
  PolicyBuilder,
  approveReview,
  dpSubmit,
  drRetrieve,
  openSession,
  rejectReview,
  requestAccess,
  reviewQueue,
  revocationPanel,
} from "../src/console";
import { ApiClient, ApiError } from "../src/client";
import { bytesEqual, fromB64, utf8 } from "../src/bytes";
import { group } from "../src/pairing";
import { Harness, needleVariants, scanRequests, startHarness } from "./support/harness";
import { readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

const RECORD = utf8("<record><hr>62bpm</hr><note>routine cardiology check</note></record>");
const SECOND_RECORD = utf8("<record><hr>firmware glitch, discard</hr></record>");

let harness: Harness;
let client: ApiClient;

interface Registered {
  session: ConsoleSession;
  keyB64: string;
}

async function registerAndLogin(
  username: string,
  kind: string,
  attributes: string[],
): Promise<Registered> {
  const reg = await client.register({ username, password: `pw-${username}`, kind, attributes });
  const session = await openSession(client, username, `pw-${username}`, {
    kind,
    attributes: reg.attributes,
    keyBytes: fromB64(reg.user_key_b64),
  });
  expect(session.userId).toBe(reg.user_id);
  return { session, keyB64: reg.user_key_b64 };
}

let patient: Registered;
let dp: Registered;
let drCardio: Registered;
let drDerm: Registered;
let drSecond: Registered;

beforeAll(async () => {
  harness = await startHarness();
  client = new ApiClient(harness.baseUrl);
  patient = await registerAndLogin("alice", "patient", ["patient"]);
  dp = await registerAndLogin("lab-7", "data-provider", ["lab"]);
  drCardio = await registerAndLogin("dr-crick", "data-requestor", ["doctor", "cardiology"]);
  drDerm = await registerAndLogin("dr-dora", "data-requestor", ["doctor", "dermatology"]);
  drSecond = await registerAndLogin("dr-sydow", "data-requestor", ["doctor", "cardiology"]);
}, 90_000);

afterAll(async () => {
  await harness?.stop();
});

describe("console end-to-end", () => {
  let fileId: string;

  it("dp submission reaches the patient queue, preview intact", async () => {
    await dpSubmit(dp.session, patient.session.userId, RECORD);
    const queue = await reviewQueue(patient.session);
    expect(queue.length).toBe(1);
    expect(bytesEqual(queue[0].preview, RECORD)).toBe(true);
    expect(queue[0].review.dp_id).toBe(dp.session.userId);
  });

  it("approve with the policy builder stores the file", async () => {
    const health = await client.health();
    const [item] = await reviewQueue(patient.session);
    const meta = await approveReview(patient.session, item, {
      policy: new PolicyBuilder().requireAll("doctor", "cardiology").requireAll("admin"),
      cloudIds: health.cloud_ids,
      threshold: 3,
    });
    fileId = meta.file_id;
    expect(meta.patient_id).toBe(patient.session.userId);
    expect(meta.threshold).toBe(3);

    const { files } = await client.listFiles(patient.session.token);
    expect(files.map((f) => f.file_id)).toContain(fileId);
    expect((await reviewQueue(patient.session)).length).toBe(0);
  });

  it("reject leaves nothing behind", async () => {
    await dpSubmit(dp.session, patient.session.userId, SECOND_RECORD);
    const queue = await reviewQueue(patient.session);
    expect(queue.length).toBe(1);
    await rejectReview(patient.session, queue[0]);
    expect((await reviewQueue(patient.session)).length).toBe(0);
    const { files } = await client.listFiles(patient.session.token);
    expect(files.length).toBe(1);
  });

  it("a satisfying reader retrieves and decrypts locally", async () => {
    const plain = await drRetrieve(drCardio.session, fileId);
    expect(bytesEqual(plain, RECORD)).toBe(true);
  });

  it("a non-satisfying reader is denied and can request access", async () => {
    await expect(drRetrieve(drDerm.session, fileId)).rejects.toMatchObject({ status: 403 });
    const requestId = await requestAccess(drDerm.session, fileId, "need the cardiology note");
    expect(requestId).toBeTruthy();
    const { notifications } = await client.notifications(patient.session.token);
    const kinds = notifications.map((n) => n.kind);
    expect(kinds).toContain("access_request");
  });

  it("revocation from the panel locks the reader out immediately", async () => {
    await drRetrieve(drCardio.session, fileId); // works before
    await revocationPanel(patient.session).revokeUser(drCardio.session.userId);
    await expect(drRetrieve(drCardio.session, fileId)).rejects.toMatchObject({ status: 403 });
    // a different cardiology key is untouched
    const plain = await drRetrieve(drSecond.session, fileId);
    expect(bytesEqual(plain, RECORD)).toBe(true);
  });

  it("a tampered action log raises an alert in the patient's panel", async () => {
    // sabotage the log's head pointer on disk, as an attacker trimming the
    // chain would; the background inspector must notice and fan out
    const headPath = join(harness.logDir, "broker_log.ndjson.head");
    readFileSync(headPath, "utf-8"); // exists
    writeFileSync(headPath, JSON.stringify({ seq: 99999, hash: "0".repeat(64) }));

    const panel = new AlertPanel(patient.session);
    let truncation = null;
    const deadline = Date.now() + 20_000;
    while (Date.now() < deadline) {
      const alerts = await panel.refresh();
      truncation = alerts.find((a) => a.rule_id === "chain-truncation") ?? null;
      if (truncation) break;
      await new Promise((r) => setTimeout(r, 250));
    }
    expect(truncation, "no chain-truncation alert reached the patient").not.toBeNull();
    expect(truncation!.severity).toBe("critical");
    expect(truncation!.recipients).toContain(patient.session.userId);

    // other users' panels stay clean
    const dermAlerts = await new AlertPanel(drDerm.session).refresh();
    expect(dermAlerts.find((a) => a.rule_id === "chain-truncation")).toBeUndefined();
  });

  it("no plaintext or private-key bytes ever left the client", () => {
    expect(harness.requests.length).toBeGreaterThan(10);
    const needles: string[] = [...needleVariants(RECORD), ...needleVariants(SECOND_RECORD)];
    const G = group(80);
    for (const who of [patient, dp, drCardio, drDerm, drSecond]) {
      const key = who.session.userKey;
      needles.push(...needleVariants(G.pointToBytes(key.d)));
      for (const [dj, dpj] of key.comps.values()) {
        needles.push(...needleVariants(G.pointToBytes(dj)));
        needles.push(...needleVariants(G.pointToBytes(dpj)));
      }
    }
    const hits = scanRequests(harness.requests, needles);
    expect(hits).toEqual([]);
  });

  it("logout wipes key material from the session", () => {
    expect(drDerm.session.hasKey).toBe(true);
    drDerm.session.logout();
    expect(drDerm.session.hasKey).toBe(false);
    expect(() => drDerm.session.userKey).toThrow(/no decryption key/);
  });
});
