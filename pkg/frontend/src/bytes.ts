/** Byte-level helpers shared by the wire-format codecs. */

export function concat(...parts: Uint8Array[]): Uint8Array {
  let total = 0;
  for (const p of parts) total += p.length;
  const out = new Uint8Array(total);
  let off = 0;
  for (const p of parts) {
    out.set(p, off);
    off += p.length;
  }
  return out;
}

export function u16be(n: number): Uint8Array {
  if (n < 0 || n > 0xffff) throw new RangeError(`u16 out of range: ${n}`);
  return new Uint8Array([n >>> 8, n & 0xff]);
}

export function u32be(n: number): Uint8Array {
  if (n < 0 || n > 0xffffffff) throw new RangeError(`u32 out of range: ${n}`);
  return new Uint8Array([(n >>> 24) & 0xff, (n >>> 16) & 0xff, (n >>> 8) & 0xff, n & 0xff]);
}

export function readU16be(data: Uint8Array, off: number): number {
  return (data[off] << 8) | data[off + 1];
}

export function readU32be(data: Uint8Array, off: number): number {
  return ((data[off] << 24) | (data[off + 1] << 16) | (data[off + 2] << 8) | data[off + 3]) >>> 0;
}

export function bytesToBig(data: Uint8Array): bigint {
  let v = 0n;
  for (const b of data) v = (v << 8n) | BigInt(b);
  return v;
}

export function bigToBytes(v: bigint, length: number): Uint8Array {
  if (v < 0n) throw new RangeError("negative integer");
  const out = new Uint8Array(length);
  let x = v;
  for (let i = length - 1; i >= 0; i--) {
    out[i] = Number(x & 0xffn);
    x >>= 8n;
  }
  if (x !== 0n) throw new RangeError(`integer does not fit in ${length} bytes`);
  return out;
}

export function utf8(text: string): Uint8Array {
  return new TextEncoder().encode(text);
}

export function fromUtf8(data: Uint8Array): string {
  return new TextDecoder("utf-8", { fatal: true }).decode(data);
}

export function toHex(data: Uint8Array): string {
  return Buffer.from(data).toString("hex");
}

export function fromHex(text: string): Uint8Array {
  if (text.length % 2 !== 0 || /[^0-9a-fA-F]/.test(text)) {
    throw new Error("invalid hex string");
  }
  return new Uint8Array(Buffer.from(text, "hex"));
}

export function toB64(data: Uint8Array): string {
  return Buffer.from(data).toString("base64");
}

export function fromB64(text: string): Uint8Array {
  return new Uint8Array(Buffer.from(text, "base64"));
}

export function bytesEqual(a: Uint8Array, b: Uint8Array): boolean {
  if (a.length !== b.length) return false;
  for (let i = 0; i < a.length; i++) if (a[i] !== b[i]) return false;
  return true;
}

/** RFC 4122 text form of a 16-byte id. */
export function uuidFromBytes(data: Uint8Array): string {
  if (data.length !== 16) throw new Error("uuid needs 16 bytes");
  const h = toHex(data);
  return `${h.slice(0, 8)}-${h.slice(8, 12)}-${h.slice(12, 16)}-${h.slice(16, 20)}-${h.slice(20)}`;
}

export function uuidToBytes(text: string): Uint8Array {
  const h = text.replace(/-/g, "");
  if (h.length !== 32) throw new Error(`bad uuid: ${text}`);
  return fromHex(h);
}
