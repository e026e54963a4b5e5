/**
 * Access-policy trees, the text grammar shared with the service, and the
 * console's policy builder.
 *
 * Grammar (keywords case-insensitive, AND binds tighter than OR):
 *
 *     expr     := or_expr
 *     or_expr  := and_expr (OR and_expr)*
 *     and_expr := atom (AND atom)*
 *     atom     := attribute | '(' expr ')' | THRESHOLD '(' k ',' expr (',' expr)+ ')'
 *
 * There is deliberately no wildcard or allow-all production; an empty policy
 * is an error both in the parser and in the builder.
 */

export interface Leaf {
  kind: "leaf";
  attribute: string;
}

export interface Threshold {
  kind: "threshold";
  k: number;
  children: PolicyTree[];
}

export type PolicyTree = Leaf | Threshold;

const ATTR_RE = /^[A-Za-z0-9_][A-Za-z0-9_\-.]*/;
const KEYWORDS = new Set(["and", "or", "threshold"]);

export class PolicySyntaxError extends Error {
  constructor(message: string, readonly position: number) {
    super(`${message} (at position ${position})`);
  }
}

export function normalizeAttribute(name: string): string {
  const n = name.trim().toLowerCase();
  const m = ATTR_RE.exec(n);
  if (!n || !m || m[0] !== n) throw new Error(`invalid attribute name: ${JSON.stringify(name)}`);
  if (KEYWORDS.has(n)) throw new Error(`attribute name collides with keyword: ${JSON.stringify(name)}`);
  return n;
}

export function leaf(attribute: string): Leaf {
  return { kind: "leaf", attribute: normalizeAttribute(attribute) };
}

export function threshold(k: number, children: PolicyTree[]): Threshold {
  if (children.length < 1) throw new Error("threshold node needs at least one child");
  if (!(Number.isInteger(k) && 1 <= k && k <= children.length)) {
    throw new Error(`threshold k=${k} out of range for ${children.length} children`);
  }
  return { kind: "threshold", k, children };
}

export function satisfies(policy: PolicyTree, attrs: Iterable<string>): boolean {
  const set = new Set<string>();
  for (const a of attrs) set.add(normalizeAttribute(a));
  if (set.size === 0) throw new Error("attribute set must be non-empty");
  const walk = (node: PolicyTree): boolean => {
    if (node.kind === "leaf") return set.has(node.attribute);
    let hits = 0;
    for (const c of node.children) if (walk(c)) hits++;
    return hits >= node.k;
  };
  return walk(policy);
}

/** Canonical text form; parsePolicy(policyToText(t)) reproduces t. */
export function policyToText(policy: PolicyTree): string {
  if (policy.kind === "leaf") return policy.attribute;
  if (policy.k === policy.children.length && policy.children.length > 1) {
    return "(" + policy.children.map(policyToText).join(" AND ") + ")";
  }
  if (policy.k === 1 && policy.children.length > 1) {
    return "(" + policy.children.map(policyToText).join(" OR ") + ")";
  }
  return `THRESHOLD(${policy.k}, ${policy.children.map(policyToText).join(", ")})`;
}

class Parser {
  pos = 0;

  constructor(readonly text: string) {}

  private error(msg: string): never {
    throw new PolicySyntaxError(msg, this.pos);
  }

  private skipWs() {
    while (this.pos < this.text.length && /\s/.test(this.text[this.pos])) this.pos++;
  }

  private peekWord(): string | null {
    this.skipWs();
    const m = ATTR_RE.exec(this.text.slice(this.pos));
    return m ? m[0] : null;
  }

  private takeWord(): string {
    const word = this.peekWord();
    if (word === null) this.error("expected attribute or keyword");
    this.pos += word.length;
    return word;
  }

  private expect(ch: string) {
    this.skipWs();
    if (this.text[this.pos] !== ch) this.error(`expected '${ch}'`);
    this.pos++;
  }

  private at(ch: string): boolean {
    this.skipWs();
    return this.text[this.pos] === ch;
  }

  parse(): PolicyTree {
    const node = this.parseOr();
    this.skipWs();
    if (this.pos !== this.text.length) this.error("unexpected trailing input");
    return node;
  }

  private parseOr(): PolicyTree {
    const children = [this.parseAnd()];
    let w: string | null;
    while ((w = this.peekWord()) !== null && w.toLowerCase() === "or") {
      this.takeWord();
      children.push(this.parseAnd());
    }
    return children.length === 1 ? children[0] : { kind: "threshold", k: 1, children };
  }

  private parseAnd(): PolicyTree {
    const children = [this.parseAtom()];
    let w: string | null;
    while ((w = this.peekWord()) !== null && w.toLowerCase() === "and") {
      this.takeWord();
      children.push(this.parseAtom());
    }
    return children.length === 1
      ? children[0]
      : { kind: "threshold", k: children.length, children };
  }

  private parseAtom(): PolicyTree {
    if (this.at("(")) {
      this.expect("(");
      const node = this.parseOr();
      this.expect(")");
      return node;
    }
    const start = this.pos;
    const word = this.takeWord();
    const lowered = word.toLowerCase();
    if (lowered === "threshold") {
      this.expect("(");
      this.skipWs();
      const m = /^\d+/.exec(this.text.slice(this.pos));
      if (!m) this.error("expected threshold count");
      const k = parseInt(m[0], 10);
      this.pos += m[0].length;
      const children: PolicyTree[] = [];
      while (this.at(",")) {
        this.expect(",");
        children.push(this.parseOr());
      }
      this.expect(")");
      if (children.length === 0) this.error("threshold needs at least one child");
      if (!(1 <= k && k <= children.length)) {
        this.pos = start;
        this.error(`threshold k=${k} out of range for ${children.length} children`);
      }
      return { kind: "threshold", k, children };
    }
    if (KEYWORDS.has(lowered)) {
      this.pos = start;
      this.error(`keyword '${word}' where attribute expected`);
    }
    return { kind: "leaf", attribute: normalizeAttribute(word) };
  }
}

export function parsePolicy(text: string): PolicyTree {
  if (!text || !text.trim()) throw new PolicySyntaxError("empty policy", 0);
  return new Parser(text).parse();
}

/**
 * Interactive builder backing the approval form.  Terms accumulate as the
 * patient adds clauses; build() refuses an empty policy, and there is no
 * wildcard/allow-all clause to add in the first place.
 */
export class PolicyBuilder {
  private terms: PolicyTree[] = [];

  /** Add one clause: a single attribute, or an AND of several. */
  requireAll(...attributes: string[]): this {
    if (attributes.length === 0) throw new Error("clause needs at least one attribute");
    const leaves = attributes.map(leaf);
    this.terms.push(leaves.length === 1 ? leaves[0] : threshold(leaves.length, leaves));
    return this;
  }

  /** Add a k-of-n clause over attributes. */
  requireThreshold(k: number, ...attributes: string[]): this {
    this.terms.push(threshold(k, attributes.map(leaf)));
    return this;
  }

  /** Add an already-built subtree (e.g. from a nested builder). */
  addClause(clause: PolicyTree): this {
    this.terms.push(clause);
    return this;
  }

  get clauseCount(): number {
    return this.terms.length;
  }

  clear(): this {
    this.terms = [];
    return this;
  }

  /** OR of all accumulated clauses; throws if nothing was added. */
  build(): PolicyTree {
    if (this.terms.length === 0) {
      throw new Error("refusing to build an empty policy: add at least one clause");
    }
    return this.terms.length === 1 ? this.terms[0] : { kind: "threshold", k: 1, children: this.terms };
  }

  buildText(): string {
    return policyToText(this.build());
  }
}
