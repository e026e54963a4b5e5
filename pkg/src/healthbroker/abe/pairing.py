"""Symmetric pairing group over a supersingular curve.

The curve is y^2 = x^3 + x over F_p with p = q*h - 1 and p = 3 (mod 4),
which makes it supersingular with #E(F_p) = p + 1 and embedding degree 2.
The symmetric pairing e(P, Q) is the reduced Tate pairing of P with the
distortion image of Q, phi(x, y) = (-x, i*y), landing in the order-q
subgroup of F_{p^2}.

Two parameter sets are bundled, selected by security level (symmetric-key
equivalent bits): 80 -> 512-bit field / 160-bit subgroup, 128 -> 1536-bit
field / 256-bit subgroup.  Parameters are fixed constants; per-instance
secrets come from setup, not from the group.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import gmpy2

__all__ = ["PairingGroup", "Point", "Fp2", "UnsupportedLevel", "op_counts"]

# group-operation counters, keyed by kind; used by cost tests only
op_counts = {"point_mul": 0, "pairing": 0}


class UnsupportedLevel(ValueError):
    """Requested security level has no bundled parameter set."""


# q: subgroup order, h: cofactor, p = q*h - 1: field prime, (gx, gy): order-q base point
_PARAMS = {
    80: dict(
        q=1211256874711787800968966376857166377126079194757,
        h=6196215170156243892413718381853247685588754355785940937706191006234858416087400588179530557161178513305972,
        p=7505208222045220439002695502018206722733587057055451113037916373142867872405829998339385322714726168031398904040305682602357644495355258522191359719188803,
        gx=5361444324155110861360521767606235550407868309321963684476589058257046132117706991201668184166085203852467685397649391429467449544763027945498272745195629,
        gy=1953612386424677410292468923857607353192526931124175125422235189291885078450485573894840796103281758465195948872887329725356305492626628992124450450871417,
    ),
    128: dict(
        q=105167683508458850587004576485020001726279311323323558635645323136461411455507,
        h=12613124236486280536251134205576043233519628418943973886462340833603129736063397207567833079196274655994954669542019125154084204926389845951496216866383466032737083241285058035571797494124927031933389744861336974378466096792040560318127562394233101246734045764663631268838060894675313986054659013529141076670717928146004670369804363853155730379709777732767188666560599625325755832604860,
        p=1326493057755660836880433183353683531493446656059807603940241137427313896043555769618402541705102934307824774587961310137858051401436712666367108352365566584946337783974293480558504251816175813735225402124643051334991342927242356666515172770436785905366994708103450464652959228857350949718522893012650638663635592957354430862966761431298507451788588239584687919916971578885742313903516369636950211357980649266398461675244214464036539544173195161778063099801964019,
        gx=223269838765668027933992519723010580873019031772131235974945011644730824008971876440192113536742650991969460885689684125450170371356400383185341899953627412439573495596829857930093763876024649228663952532342801845644696503978575602335621669984096146156997503060640870258879268592573139399471156908501053658484903578790719852526710866079509802962165639794809068106038849849875038996031445943549138524184694587006163128088994346904203786131696536733253262807817599,
        gy=660571999084573427373932893524873398906347211535625417388555984608492453824913283059061665722626778027287655904059233032340349088975910872886893957332183508409780928522826056298045093901422402370000462006812639340754235538842852108732916561656340454654245246850702528226259300682419369192243226013700566838683757347375045419392161182783138232419222514059912389066634398444484487708734868630718332435597971293686222943784702090436563678688262047981600661985657666,
    ),
}

_mpz = gmpy2.mpz


@dataclass(frozen=True)
class Point:
    """Affine point on the curve; ``None`` coordinates denote infinity."""

    x: object | None
    y: object | None

    @property
    def is_infinity(self) -> bool:
        return self.x is None


INFINITY = Point(None, None)


@dataclass(frozen=True)
class Fp2:
    """a + b*i with i^2 = -1; element of F_{p^2}."""

    a: object
    b: object


class PairingGroup:
    """Arithmetic for one bundled parameter set."""

    def __init__(self, level: int):
        if level not in _PARAMS:
            raise UnsupportedLevel(f"no parameters for security level {level}")
        par = _PARAMS[level]
        self.level = level
        self.q = _mpz(par["q"])
        self.h = _mpz(par["h"])
        self.p = _mpz(par["p"])
        self.g = Point(_mpz(par["gx"]), _mpz(par["gy"]))
        self.nbytes = (par["p"].bit_length() + 7) // 8
        self._gt_gen = None

    # -- curve arithmetic ------------------------------------------------

    def add(self, P: Point, Q: Point) -> Point:
        p = self.p
        if P.is_infinity:
            return Q
        if Q.is_infinity:
            return P
        if P.x == Q.x:
            if (P.y + Q.y) % p == 0:
                return INFINITY
            lam = (3 * P.x * P.x + 1) * gmpy2.invert(2 * P.y, p) % p
        else:
            lam = (Q.y - P.y) * gmpy2.invert(Q.x - P.x, p) % p
        xr = (lam * lam - P.x - Q.x) % p
        return Point(xr, (lam * (P.x - xr) - P.y) % p)

    def neg(self, P: Point) -> Point:
        if P.is_infinity:
            return P
        return Point(P.x, (-P.y) % self.p)

    def mul(self, P: Point, k) -> Point:
        op_counts["point_mul"] += 1
        k = _mpz(k) % self.q
        R = INFINITY
        A = P
        while k:
            if k & 1:
                R = self.add(R, A)
            A = self.add(A, A)
            k >>= 1
        return R

    def on_curve(self, P: Point) -> bool:
        if P.is_infinity:
            return True
        return (P.y * P.y - (P.x * P.x * P.x + P.x)) % self.p == 0

    def hash_to_point(self, label: bytes) -> Point:
        """Deterministic hash onto the order-q subgroup (try-and-increment)."""
        p = self.p
        ctr = 0
        while True:
            digest = b""
            blocks = (self.nbytes + 31) // 32
            for i in range(blocks):
                digest += hashlib.sha256(
                    b"htp" + ctr.to_bytes(4, "big") + i.to_bytes(4, "big") + label
                ).digest()
            x = _mpz(int.from_bytes(digest[: self.nbytes], "big")) % p
            y2 = (x * x * x + x) % p
            if y2 != 0 and gmpy2.powmod(y2, (p - 1) // 2, p) == 1:
                y = gmpy2.powmod(y2, (p + 1) // 4, p)
                if y > p - y:
                    y = p - y
                R = self._cofactor_mul(Point(x, y))
                if not R.is_infinity:
                    return R
            ctr += 1

    def _cofactor_mul(self, P: Point) -> Point:
        R = INFINITY
        A = P
        k = self.h
        while k:
            if k & 1:
                R = self.add(R, A)
            A = self.add(A, A)
            k >>= 1
        return R

    # -- F_{p^2} arithmetic ----------------------------------------------

    def fp2_mul(self, u: Fp2, v: Fp2) -> Fp2:
        p = self.p
        return Fp2((u.a * v.a - u.b * v.b) % p, (u.a * v.b + u.b * v.a) % p)

    def fp2_inv(self, u: Fp2) -> Fp2:
        p = self.p
        d = gmpy2.invert(u.a * u.a + u.b * u.b, p)
        return Fp2(u.a * d % p, (-u.b) * d % p)

    def fp2_pow(self, u: Fp2, k) -> Fp2:
        k = _mpz(k) % self.q
        R = Fp2(_mpz(1), _mpz(0))
        A = u
        while k:
            if k & 1:
                R = self.fp2_mul(R, A)
            A = self.fp2_mul(A, A)
            k >>= 1
        return R

    def fp2_eq(self, u: Fp2, v: Fp2) -> bool:
        return u.a == v.a and u.b == v.b

    def gt_one(self) -> Fp2:
        return Fp2(_mpz(1), _mpz(0))

    # -- pairing ----------------------------------------------------------

    def pair(self, P: Point, Q: Point) -> Fp2:
        """Reduced Tate pairing e(P, phi(Q)); bilinear, non-degenerate."""
        op_counts["pairing"] += 1
        if P.is_infinity or Q.is_infinity:
            return self.gt_one()
        p = self.p
        # phi(Q) = (-xq, i*yq); line evaluations use only xq, yq directly
        xq, yq = Q.x, Q.y
        f = self.gt_one()
        V = P
        bits = bin(int(self.q))[3:]  # skip leading 1
        for bit in bits:
            # tangent at V
            lam = (3 * V.x * V.x + 1) * gmpy2.invert(2 * V.y, p) % p
            la = (lam * (xq + V.x) - V.y) % p
            f = self.fp2_mul(self.fp2_mul(f, f), Fp2(la, yq))
            V = self.add(V, V)
            if bit == "1":
                if V.is_infinity or V.x == P.x:
                    # chord is vertical; contributes only F_p factors
                    V = self.add(V, P)
                else:
                    lam = (P.y - V.y) * gmpy2.invert(P.x - V.x, p) % p
                    la = (lam * (xq + V.x) - V.y) % p
                    f = self.fp2_mul(f, Fp2(la, yq))
                    V = self.add(V, P)
        # final exponentiation: f^(p-1) then ^h, since (p^2-1)/q = (p-1)*h
        f = self.fp2_mul(Fp2(f.a, (-f.b) % p), self.fp2_inv(f))
        R = self.gt_one()
        A = f
        k = self.h
        while k:
            if k & 1:
                R = self.fp2_mul(R, A)
            A = self.fp2_mul(A, A)
            k >>= 1
        return R

    def gt_generator(self) -> Fp2:
        if self._gt_gen is None:
            self._gt_gen = self.pair(self.g, self.g)
        return self._gt_gen

    # -- serialization ----------------------------------------------------

    def point_to_bytes(self, P: Point) -> bytes:
        if P.is_infinity:
            return b"\x00" + b"\x00" * self.nbytes
        flag = 2 if P.y <= self.p - P.y else 3
        return bytes([flag]) + int(P.x).to_bytes(self.nbytes, "big")

    def point_from_bytes(self, data: bytes) -> Point:
        if len(data) != self.nbytes + 1:
            raise ValueError("bad point encoding length")
        flag = data[0]
        if flag == 0:
            return INFINITY
        if flag not in (2, 3):
            raise ValueError("bad point compression flag")
        p = self.p
        x = _mpz(int.from_bytes(data[1:], "big"))
        y2 = (x * x * x + x) % p
        y = gmpy2.powmod(y2, (p + 1) // 4, p)
        if (y * y - y2) % p != 0:
            raise ValueError("not a curve point")
        low = min(y, p - y)
        y = low if flag == 2 else p - low
        return Point(x, y)

    def gt_to_bytes(self, u: Fp2) -> bytes:
        return int(u.a).to_bytes(self.nbytes, "big") + int(u.b).to_bytes(self.nbytes, "big")

    def gt_from_bytes(self, data: bytes) -> Fp2:
        if len(data) != 2 * self.nbytes:
            raise ValueError("bad GT encoding length")
        return Fp2(
            _mpz(int.from_bytes(data[: self.nbytes], "big")),
            _mpz(int.from_bytes(data[self.nbytes :], "big")),
        )
