/**
 * Symmetric pairing group over a supersingular curve, matching the service's
 * bundled parameter sets byte-for-byte.
 *
 * The curve is y^2 = x^3 + x over F_p with p = q*h - 1 and p = 3 (mod 4):
 * supersingular, #E(F_p) = p + 1, embedding degree 2.  e(P, Q) is the reduced
 * Tate pairing of P with the distortion image of Q, landing in the order-q
 * subgroup of F_{p^2}.  Two parameter sets: level 80 (512-bit field / 160-bit
 * subgroup) and level 128 (1536-bit field / 256-bit subgroup).
 */

import { createHash } from "node:crypto";
import { bigToBytes, bytesToBig, concat, u32be } from "./bytes";

export interface Point {
  x: bigint;
  y: bigint;
}

/** Affine point or the point at infinity (null). */
export type MaybePoint = Point | null;

export interface Fp2 {
  a: bigint;
  b: bigint;
}

interface Params {
  q: bigint;
  h: bigint;
  p: bigint;
  gx: bigint;
  gy: bigint;
}

const PARAMS: Record<number, Params> = {
  80: {
    q: 1211256874711787800968966376857166377126079194757n,
    h: 6196215170156243892413718381853247685588754355785940937706191006234858416087400588179530557161178513305972n,
    p: 7505208222045220439002695502018206722733587057055451113037916373142867872405829998339385322714726168031398904040305682602357644495355258522191359719188803n,
    gx: 5361444324155110861360521767606235550407868309321963684476589058257046132117706991201668184166085203852467685397649391429467449544763027945498272745195629n,
    gy: 1953612386424677410292468923857607353192526931124175125422235189291885078450485573894840796103281758465195948872887329725356305492626628992124450450871417n,
  },
  128: {
    q: 105167683508458850587004576485020001726279311323323558635645323136461411455507n,
    h: 12613124236486280536251134205576043233519628418943973886462340833603129736063397207567833079196274655994954669542019125154084204926389845951496216866383466032737083241285058035571797494124927031933389744861336974378466096792040560318127562394233101246734045764663631268838060894675313986054659013529141076670717928146004670369804363853155730379709777732767188666560599625325755832604860n,
    p: 1326493057755660836880433183353683531493446656059807603940241137427313896043555769618402541705102934307824774587961310137858051401436712666367108352365566584946337783974293480558504251816175813735225402124643051334991342927242356666515172770436785905366994708103450464652959228857350949718522893012650638663635592957354430862966761431298507451788588239584687919916971578885742313903516369636950211357980649266398461675244214464036539544173195161778063099801964019n,
    gx: 223269838765668027933992519723010580873019031772131235974945011644730824008971876440192113536742650991969460885689684125450170371356400383185341899953627412439573495596829857930093763876024649228663952532342801845644696503978575602335621669984096146156997503060640870258879268592573139399471156908501053658484903578790719852526710866079509802962165639794809068106038849849875038996031445943549138524184694587006163128088994346904203786131696536733253262807817599n,
    gy: 660571999084573427373932893524873398906347211535625417388555984608492453824913283059061665722626778027287655904059233032340349088975910872886893957332183508409780928522826056298045093901422402370000462006812639340754235538842852108732916561656340454654245246850702528226259300682419369192243226013700566838683757347375045419392161182783138232419222514059912389066634398444484487708734868630718332435597971293686222943784702090436563678688262047981600661985657666n,
  },
};

function mod(a: bigint, m: bigint): bigint {
  const r = a % m;
  return r < 0n ? r + m : r;
}

export function modPow(base: bigint, exp: bigint, m: bigint): bigint {
  let b = mod(base, m);
  let e = exp;
  let r = 1n;
  while (e > 0n) {
    if (e & 1n) r = (r * b) % m;
    b = (b * b) % m;
    e >>= 1n;
  }
  return r;
}

export function modInv(a: bigint, m: bigint): bigint {
  // extended Euclid; a assumed coprime to m
  let [old_r, r] = [mod(a, m), m];
  let [old_s, s] = [1n, 0n];
  while (r !== 0n) {
    const q = old_r / r;
    [old_r, r] = [r, old_r - q * r];
    [old_s, s] = [s, old_s - q * s];
  }
  if (old_r !== 1n) throw new Error("not invertible");
  return mod(old_s, m);
}

function sha256(...parts: Uint8Array[]): Uint8Array {
  const h = createHash("sha256");
  for (const p of parts) h.update(p);
  return new Uint8Array(h.digest());
}

const HTP_PREFIX = new TextEncoder().encode("htp");

export class UnsupportedLevel extends Error {}

export class PairingGroup {
  readonly level: number;
  readonly q: bigint;
  readonly h: bigint;
  readonly p: bigint;
  readonly g: Point;
  readonly nbytes: number;
  private gtGen: Fp2 | null = null;

  constructor(level: number) {
    const par = PARAMS[level];
    if (!par) throw new UnsupportedLevel(`no parameters for security level ${level}`);
    this.level = level;
    this.q = par.q;
    this.h = par.h;
    this.p = par.p;
    this.g = { x: par.gx, y: par.gy };
    this.nbytes = Math.ceil(par.p.toString(2).length / 8);
  }

  // -- curve arithmetic --------------------------------------------------

  add(P: MaybePoint, Q: MaybePoint): MaybePoint {
    const p = this.p;
    if (P === null) return Q;
    if (Q === null) return P;
    let lam: bigint;
    if (P.x === Q.x) {
      if (mod(P.y + Q.y, p) === 0n) return null;
      lam = mod((3n * P.x * P.x + 1n) * modInv(2n * P.y, p), p);
    } else {
      lam = mod((Q.y - P.y) * modInv(Q.x - P.x, p), p);
    }
    const xr = mod(lam * lam - P.x - Q.x, p);
    return { x: xr, y: mod(lam * (P.x - xr) - P.y, p) };
  }

  neg(P: MaybePoint): MaybePoint {
    if (P === null) return null;
    return { x: P.x, y: mod(-P.y, this.p) };
  }

  mul(P: MaybePoint, k: bigint): MaybePoint {
    let e = mod(k, this.q);
    let R: MaybePoint = null;
    let A = P;
    while (e > 0n) {
      if (e & 1n) R = this.add(R, A);
      A = this.add(A, A);
      e >>= 1n;
    }
    return R;
  }

  onCurve(P: MaybePoint): boolean {
    if (P === null) return true;
    return mod(P.y * P.y - (P.x * P.x * P.x + P.x), this.p) === 0n;
  }

  /** Deterministic hash onto the order-q subgroup (try-and-increment). */
  hashToPoint(label: Uint8Array): Point {
    const p = this.p;
    const blocks = Math.ceil(this.nbytes / 32);
    for (let ctr = 0; ; ctr++) {
      const chunks: Uint8Array[] = [];
      for (let i = 0; i < blocks; i++) {
        chunks.push(sha256(HTP_PREFIX, u32be(ctr), u32be(i), label));
      }
      const digest = concat(...chunks);
      const x = mod(bytesToBig(digest.slice(0, this.nbytes)), p);
      const y2 = mod(x * x * x + x, p);
      if (y2 !== 0n && modPow(y2, (p - 1n) / 2n, p) === 1n) {
        let y = modPow(y2, (p + 1n) / 4n, p);
        if (y > p - y) y = p - y;
        const R = this.cofactorMul({ x, y });
        if (R !== null) return R;
      }
    }
  }

  private cofactorMul(P: MaybePoint): MaybePoint {
    let R: MaybePoint = null;
    let A = P;
    let k = this.h;
    while (k > 0n) {
      if (k & 1n) R = this.add(R, A);
      A = this.add(A, A);
      k >>= 1n;
    }
    return R;
  }

  // -- F_{p^2} arithmetic ------------------------------------------------

  fp2Mul(u: Fp2, v: Fp2): Fp2 {
    const p = this.p;
    return { a: mod(u.a * v.a - u.b * v.b, p), b: mod(u.a * v.b + u.b * v.a, p) };
  }

  fp2Inv(u: Fp2): Fp2 {
    const p = this.p;
    const d = modInv(u.a * u.a + u.b * u.b, p);
    return { a: mod(u.a * d, p), b: mod(-u.b * d, p) };
  }

  fp2Pow(u: Fp2, k: bigint): Fp2 {
    let e = mod(k, this.q);
    let R: Fp2 = { a: 1n, b: 0n };
    let A = u;
    while (e > 0n) {
      if (e & 1n) R = this.fp2Mul(R, A);
      A = this.fp2Mul(A, A);
      e >>= 1n;
    }
    return R;
  }

  fp2Eq(u: Fp2, v: Fp2): boolean {
    return u.a === v.a && u.b === v.b;
  }

  gtOne(): Fp2 {
    return { a: 1n, b: 0n };
  }

  // -- pairing -----------------------------------------------------------

  /** Reduced Tate pairing e(P, phi(Q)); bilinear, non-degenerate. */
  pair(P: MaybePoint, Q: MaybePoint): Fp2 {
    if (P === null || Q === null) return this.gtOne();
    const p = this.p;
    const xq = Q.x;
    const yq = Q.y;
    let f = this.gtOne();
    let V: MaybePoint = P;
    const bits = this.q.toString(2).slice(1); // skip the leading 1
    for (const bit of bits) {
      // tangent at V (V is never infinity while looping over q's bits)
      const Vp = V as Point;
      let lam = mod((3n * Vp.x * Vp.x + 1n) * modInv(2n * Vp.y, p), p);
      let la = mod(lam * (xq + Vp.x) - Vp.y, p);
      f = this.fp2Mul(this.fp2Mul(f, f), { a: la, b: yq });
      V = this.add(V, V);
      if (bit === "1") {
        if (V === null || V.x === P.x) {
          // chord is vertical; contributes only F_p factors
          V = this.add(V, P);
        } else {
          lam = mod((P.y - V.y) * modInv(P.x - V.x, p), p);
          la = mod(lam * (xq + V.x) - V.y, p);
          f = this.fp2Mul(f, { a: la, b: yq });
          V = this.add(V, P);
        }
      }
    }
    // final exponentiation: f^(p-1) then ^h, since (p^2-1)/q = (p-1)*h
    f = this.fp2Mul({ a: f.a, b: mod(-f.b, p) }, this.fp2Inv(f));
    let R = this.gtOne();
    let A = f;
    let k = this.h;
    while (k > 0n) {
      if (k & 1n) R = this.fp2Mul(R, A);
      A = this.fp2Mul(A, A);
      k >>= 1n;
    }
    return R;
  }

  gtGenerator(): Fp2 {
    if (this.gtGen === null) this.gtGen = this.pair(this.g, this.g);
    return this.gtGen;
  }

  // -- serialization -----------------------------------------------------

  pointToBytes(P: MaybePoint): Uint8Array {
    if (P === null) return new Uint8Array(this.nbytes + 1);
    const flag = P.y <= this.p - P.y ? 2 : 3;
    return concat(new Uint8Array([flag]), bigToBytes(P.x, this.nbytes));
  }

  pointFromBytes(data: Uint8Array): MaybePoint {
    if (data.length !== this.nbytes + 1) throw new Error("bad point encoding length");
    const flag = data[0];
    if (flag === 0) return null;
    if (flag !== 2 && flag !== 3) throw new Error("bad point compression flag");
    const p = this.p;
    const x = bytesToBig(data.slice(1));
    const y2 = mod(x * x * x + x, p);
    let y = modPow(y2, (p + 1n) / 4n, p);
    if (mod(y * y - y2, p) !== 0n) throw new Error("not a curve point");
    const low = y < p - y ? y : p - y;
    y = flag === 2 ? low : p - low;
    return { x, y };
  }

  gtToBytes(u: Fp2): Uint8Array {
    return concat(bigToBytes(u.a, this.nbytes), bigToBytes(u.b, this.nbytes));
  }

  gtFromBytes(data: Uint8Array): Fp2 {
    if (data.length !== 2 * this.nbytes) throw new Error("bad GT encoding length");
    return { a: bytesToBig(data.slice(0, this.nbytes)), b: bytesToBig(data.slice(this.nbytes)) };
  }
}

const groups = new Map<number, PairingGroup>();

export function group(level: number): PairingGroup {
  let g = groups.get(level);
  if (!g) {
    g = new PairingGroup(level);
    groups.set(level, g);
  }
  return g;
}
