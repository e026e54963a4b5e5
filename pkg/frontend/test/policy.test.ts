import { describe, expect, it } from "vitest";
import {
  PolicyBuilder,
  PolicySyntaxError,
  leaf,
  parsePolicy,
  policyToText,
  satisfies,
  threshold,
} from "../src/policy";

describe("policy grammar", () => {
  it("parses AND tighter than OR", () => {
    const t = parsePolicy("doctor AND cardiology OR admin");
    expect(policyToText(t)).toBe("((doctor AND cardiology) OR admin)");
    expect(satisfies(t, ["admin"])).toBe(true);
    expect(satisfies(t, ["doctor"])).toBe(false);
    expect(satisfies(t, ["doctor", "cardiology"])).toBe(true);
  });

  it("round-trips canonical text", () => {
    for (const text of [
      "doctor",
      "(doctor AND cardiology)",
      "(a OR b OR c)",
      "THRESHOLD(2, a, b, c)",
      "((a AND b) OR THRESHOLD(2, c, d, e))",
    ]) {
      expect(policyToText(parsePolicy(text))).toBe(text);
    }
  });

  it("is case-insensitive on keywords and attributes", () => {
    const t = parsePolicy("Doctor AND CARDIOLOGY");
    expect(policyToText(t)).toBe("(doctor AND cardiology)");
  });

  it("rejects empty and malformed input", () => {
    expect(() => parsePolicy("")).toThrow(PolicySyntaxError);
    expect(() => parsePolicy("   ")).toThrow(PolicySyntaxError);
    expect(() => parsePolicy("doctor AND")).toThrow(PolicySyntaxError);
    expect(() => parsePolicy("(doctor")).toThrow(PolicySyntaxError);
    expect(() => parsePolicy("THRESHOLD(4, a, b)")).toThrow(PolicySyntaxError);
    expect(() => parsePolicy("doctor extra")).toThrow(PolicySyntaxError);
  });

  it("has no wildcard production", () => {
    expect(() => parsePolicy("*")).toThrow(PolicySyntaxError);
    expect(() => parsePolicy("doctor OR *")).toThrow(PolicySyntaxError);
  });

  it("evaluates thresholds partially", () => {
    const t = threshold(2, [leaf("a"), leaf("b"), leaf("c")]);
    expect(satisfies(t, ["a", "c"])).toBe(true);
    expect(satisfies(t, ["b"])).toBe(false);
  });
});

describe("policy builder", () => {
  it("builds an OR of clauses", () => {
    const b = new PolicyBuilder()
      .requireAll("doctor", "cardiology")
      .requireAll("admin");
    expect(b.buildText()).toBe("((doctor AND cardiology) OR admin)");
  });

  it("supports threshold clauses", () => {
    const b = new PolicyBuilder().requireThreshold(2, "a", "b", "c");
    expect(b.buildText()).toBe("THRESHOLD(2, a, b, c)");
  });

  it("refuses an empty policy", () => {
    expect(() => new PolicyBuilder().build()).toThrow(/empty policy/);
    const b = new PolicyBuilder().requireAll("doctor");
    b.clear();
    expect(() => b.build()).toThrow(/empty policy/);
  });

  it("refuses clauses with no attributes", () => {
    expect(() => new PolicyBuilder().requireAll()).toThrow(/at least one attribute/);
  });

  it("offers no allow-all clause: wildcards and keywords are invalid attributes", () => {
    expect(() => new PolicyBuilder().requireAll("*")).toThrow(/invalid attribute/);
    expect(() => new PolicyBuilder().requireAll("")).toThrow(/invalid attribute/);
    expect(() => new PolicyBuilder().requireAll("or")).toThrow(/keyword/);
  });

  it("builder output parses on the server grammar side (same canonical text)", () => {
    const text = new PolicyBuilder()
      .requireAll("doctor", "cardiology")
      .requireThreshold(2, "nurse", "lab", "clinic")
      .buildText();
    expect(policyToText(parsePolicy(text))).toBe(text);
  });
});
