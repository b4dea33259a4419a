"""Production bilinear engine over a supersingular curve.

The curve is E: y^2 = x^3 + x over F_p with p = 3 (mod 4), which is
supersingular with #E(F_p) = p + 1 and embedding degree 2.  G is the
order-q subgroup of E(F_p); GT is the order-q subgroup of F_{p^2}*.

The symmetric map is the modified Tate pairing: pair(A, B) computes the
Miller function f_{q,A} at the distorted point phi(B) = (-x_B, i*y_B),
where F_{p^2} = F_p[i] with i^2 = -1, followed by the final exponentiation
to the power (p^2 - 1)/q.  The distortion map keeps both arguments in
E(F_p), so the pairing is genuinely symmetric and non-degenerate on G.

Because phi(B) has its x-coordinate in F_p, vertical-line evaluations land
in the subfield F_p and are erased by the final exponentiation, so the
Miller loop only tracks line numerators (denominator elimination).

Default parameters give a 160-bit group order over a 511-bit field,
comparable to the classic "type A" pairing parameter sets.  They were
generated by scripts/gen_pairing_params.py and are demonstration-grade.
"""

from __future__ import annotations

import hashlib

from gmpy2 import invert, mpz, powmod

from .bilinear import DecodeError, GroupDescription, _is_probable_prime

# Group order q (160 bits), cofactor h, field prime p = q*h - 1 (511 bits).
SS_Q = 0x992087A907474C9B615FC458D9AA44681705A6BD
SS_H = 0x9FAE1DD5F4579F6B7502F6193912763C94CCA8184B9ADFD92C83CBB0549D6E937540B3BC0C014A28C72A9A98
SS_P = SS_Q * SS_H - 1

_GENERATOR_SEED = b"crisischain/ss512/generator/v1"


class SupersingularEngine:
    """Symmetric pairing engine over E: y^2 = x^3 + x, p = 3 (mod 4).

    Group elements are affine points (x, y) as mpz pairs, or None for the
    point at infinity.  GT elements are F_{p^2} values (a, b) = a + b*i.
    """

    def __init__(self, q: int = SS_Q, cofactor: int = SS_H, name: str = "ss512"):
        p = q * cofactor - 1
        if p % 4 != 3:
            raise ValueError("field prime must be 3 mod 4")
        if not _is_probable_prime(q) or not _is_probable_prime(p):
            raise ValueError("q and p must be prime")
        self.q = int(q)
        self.cofactor = int(cofactor)
        self.p = mpz(p)
        self.name = name
        self.scalar_len = (self.q.bit_length() + 7) // 8
        self._coord_len = (int(p).bit_length() + 7) // 8
        self.element_len = 1 + 2 * self._coord_len
        self.gt_len = 2 * self._coord_len
        self._final_exp = (int(self.p) + 1) // self.q
        self.P = self.hash_to_group(_GENERATOR_SEED)

    def describe(self) -> GroupDescription:
        return GroupDescription(self.q, self.name, self.element_len, self.gt_len)

    # -- curve arithmetic (affine) ------------------------------------------
    def identity(self):
        return None

    def is_identity(self, a) -> bool:
        return a is None

    def _on_curve(self, pt) -> bool:
        x, y = pt
        return (y * y - (x * x * x + x)) % self.p == 0

    def add(self, a, b):
        if a is None:
            return b
        if b is None:
            return a
        p = self.p
        x1, y1 = a
        x2, y2 = b
        if x1 == x2:
            if (y1 + y2) % p == 0:
                return None
            lam = (3 * x1 * x1 + 1) * invert(2 * y1, p) % p
        else:
            lam = (y2 - y1) * invert(x2 - x1, p) % p
        x3 = (lam * lam - x1 - x2) % p
        return (x3, (lam * (x1 - x3) - y1) % p)

    def neg(self, a):
        if a is None:
            return None
        return (a[0], (self.p - a[1]) % self.p)

    def scalar_mul(self, k: int, a):
        k = int(k) % self.q
        result = None
        addend = a
        while k:
            if k & 1:
                result = self.add(result, addend)
            addend = self.add(addend, addend)
            k >>= 1
        return result

    # -- F_{p^2} = F_p[i], elements (a, b) = a + b*i --------------------------
    def gt_identity(self):
        return (mpz(1), mpz(0))

    def gt_mul(self, u, v):
        p = self.p
        a, b = u
        c, d = v
        ac = a * c % p
        bd = b * d % p
        return ((ac - bd) % p, ((a + b) * (c + d) - ac - bd) % p)

    def _gt_sqr(self, u):
        p = self.p
        a, b = u
        return ((a - b) * (a + b) % p, 2 * a * b % p)

    def _gt_inv(self, u):
        a, b = u
        n = invert((a * a + b * b) % self.p, self.p)
        return (a * n % self.p, (self.p - b) * n % self.p)

    def gt_pow(self, u, k: int):
        k = int(k) % self.q
        result = (mpz(1), mpz(0))
        base = u
        while k:
            if k & 1:
                result = self.gt_mul(result, base)
            base = self._gt_sqr(base)
            k >>= 1
        return result

    # -- pairing ---------------------------------------------------------------
    def pair(self, a, b):
        """Modified Tate pairing of two order-q points of E(F_p)."""
        if a is None or b is None:
            return self.gt_identity()
        p = self.p
        xb, yb = b
        xq = (p - xb) % p       # x-coordinate of phi(b), lies in F_p
        neg_yb = (p - yb) % p   # imaginary part of -y(phi(b))
        xa, ya = a
        f = (mpz(1), mpz(0))
        t = a
        for bit in bin(self.q)[3:]:
            xt, yt = t
            lam = (3 * xt * xt + 1) * invert(2 * yt, p) % p
            line = ((lam * (xq - xt) + yt) % p, neg_yb)
            f = self.gt_mul(self._gt_sqr(f), line)
            t = self.add(t, t)
            if bit == "1":
                xt, yt = t
                if xt != xa:
                    lam = (ya - yt) * invert(xa - xt, p) % p
                    line = ((lam * (xq - xt) + yt) % p, neg_yb)
                    f = self.gt_mul(f, line)
                # else: the chord is the final vertical line, which lies in
                # the subfield F_p and is erased by the final exponentiation
                t = self.add(t, a)
        # final exponentiation: (p^2-1)/q = (p-1) * (p+1)/q
        fa, fb = f
        f = self.gt_mul((fa, (p - fb) % p), self._gt_inv(f))  # f^(p-1)
        result = (mpz(1), mpz(0))
        base = f
        e = self._final_exp
        while e:
            if e & 1:
                result = self.gt_mul(result, base)
            base = self._gt_sqr(base)
            e >>= 1
        return result

    # -- serialization -----------------------------------------------------
    def encode_elem(self, a) -> bytes:
        if a is None:
            return b"\x00" * self.element_len
        x, y = a
        return (
            b"\x04"
            + int(x).to_bytes(self._coord_len, "big")
            + int(y).to_bytes(self._coord_len, "big")
        )

    def decode_elem(self, data: bytes):
        if len(data) != self.element_len:
            raise DecodeError(f"expected {self.element_len} bytes, got {len(data)}")
        if data[0] == 0x00:
            if any(data[1:]):
                raise DecodeError("nonzero payload on infinity encoding")
            return None
        if data[0] != 0x04:
            raise DecodeError("unknown point encoding tag")
        x = mpz(int.from_bytes(data[1 : 1 + self._coord_len], "big"))
        y = mpz(int.from_bytes(data[1 + self._coord_len :], "big"))
        if x >= self.p or y >= self.p:
            raise DecodeError("coordinate out of range")
        pt = (x, y)
        if not self._on_curve(pt):
            raise DecodeError("point not on curve")
        if self.scalar_mul_unreduced(self.q, pt) is not None:
            raise DecodeError("point not in the order-q subgroup")
        return pt

    def encode_gt(self, u) -> bytes:
        a, b = u
        return int(a).to_bytes(self._coord_len, "big") + int(b).to_bytes(
            self._coord_len, "big"
        )

    def decode_gt(self, data: bytes):
        if len(data) != self.gt_len:
            raise DecodeError(f"expected {self.gt_len} bytes, got {len(data)}")
        a = mpz(int.from_bytes(data[: self._coord_len], "big"))
        b = mpz(int.from_bytes(data[self._coord_len :], "big"))
        if a >= self.p or b >= self.p:
            raise DecodeError("GT coordinate out of range")
        if a == 0 and b == 0:
            raise DecodeError("zero is not a GT element")
        return (a, b)

    # -- hashing and randomness ---------------------------------------------
    def hash_to_group(self, data: bytes):
        """Try-and-increment: hash to an x-coordinate, lift, clear cofactor."""
        if not data:
            raise ValueError("hash_to_group input must be nonempty")
        p = self.p
        ctr = 0
        while True:
            digest = hashlib.sha256(b"H1:" + data + ctr.to_bytes(4, "big")).digest()
            x = mpz(int.from_bytes(digest + hashlib.sha256(b"H1x:" + digest).digest(), "big")) % p
            rhs = (x * x * x + x) % p
            if powmod(rhs, (p - 1) // 2, p) <= 1:  # 0 or 1: square (or zero)
                y = powmod(rhs, (p + 1) // 4, p)
                if (y * y - rhs) % p == 0:
                    pt = self.scalar_mul_unreduced(self.cofactor, (x, y))
                    if pt is not None:
                        return pt
            ctr += 1

    def scalar_mul_unreduced(self, k: int, a):
        """Scalar multiplication without reduction mod q (cofactor clearing)."""
        result = None
        addend = a
        k = int(k)
        while k:
            if k & 1:
                result = self.add(result, addend)
            addend = self.add(addend, addend)
            k >>= 1
        return result

    def random_scalar(self, rng) -> int:
        return rng.randrange(1, self.q)


_default_engine = None


def ss512_engine() -> SupersingularEngine:
    """The default production engine (cached; construction is not free)."""
    global _default_engine
    if _default_engine is None:
        _default_engine = SupersingularEngine()
    return _default_engine
