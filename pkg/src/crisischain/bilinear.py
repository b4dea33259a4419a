"""Pluggable bilinear group engines and the protocol hash functions.

An engine provides two cyclic groups of the same prime order q: an additive
group G with generator P and a multiplicative target group GT, linked by a
symmetric bilinear map pair(a, b) with pair(x*P, y*P) == pair(P, P)**(x*y).
Engines also own canonical fixed-width serialization for group and target
elements, and a deterministic hash-to-group map.

Two engines exist: the toy engine below (trivially breakable, for exhaustive
tests and demos) and the supersingular-curve engine in ``pairing``.

The five protocol hash functions are SHA-256 based with domain-separation
prefixes "H1:".."H5:".  H1 maps bytes into G (try-and-increment on a counter
appended to the input), H2 and H5 map into [1, q), H3 is a fixed 32-byte
digest, and H4 is a counter-mode expansion with the XOF prefix property.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

SEED_LEN = 32


class DecodeError(ValueError):
    """Malformed or invalid canonical encoding."""


@dataclass(frozen=True)
class GroupDescription:
    q: int
    name: str
    element_len: int
    gt_len: int


def _is_probable_prime(n: int) -> bool:
    """Miller-Rabin with a fixed witness set (deterministic below 3.3e24)."""
    if n < 2:
        return False
    small = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43]
    for sp in small:
        if n % sp == 0:
            return n == sp
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in small:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


class ToyEngine:
    """Symmetric pairing over G = (Z_q, +), GT = <g> in Z_p* with p = 2q + 1.

    pair(a, b) = g**(a*b mod q) mod p, which is bilinear, non-degenerate and
    computable by construction.  INSECURE: the discrete log in G is the
    identity map, so every private key is public.  Test and demo use only.
    """

    def __init__(self, q: int, p: int, g: int):
        if not _is_probable_prime(q) or q <= 3:
            raise ValueError("q must be a prime > 3")
        if p != 2 * q + 1:
            raise ValueError("p must equal 2q + 1")
        if not _is_probable_prime(p):
            raise ValueError("p must be prime")
        if g % p in (0, 1) or pow(g, q, p) != 1:
            raise ValueError("g must have multiplicative order q mod p")
        self.q = q
        self.p = p
        self.g = g % p
        self.name = f"toy-q{q}"
        self.scalar_len = (q.bit_length() + 7) // 8
        self.element_len = self.scalar_len
        self.gt_len = (p.bit_length() + 7) // 8
        self.P = 1

    def describe(self) -> GroupDescription:
        return GroupDescription(self.q, self.name, self.element_len, self.gt_len)

    # -- group G ----------------------------------------------------------
    def identity(self):
        return 0

    def add(self, a, b):
        return (a + b) % self.q

    def neg(self, a):
        return (-a) % self.q

    def scalar_mul(self, k: int, a):
        return k * a % self.q

    def is_identity(self, a) -> bool:
        return a % self.q == 0

    # -- target group GT --------------------------------------------------
    def gt_identity(self):
        return 1

    def gt_mul(self, x, y):
        return x * y % self.p

    def gt_pow(self, x, k: int):
        return pow(x, k, self.p)

    def pair(self, a, b):
        return pow(self.g, a * b % self.q, self.p)

    # -- serialization ----------------------------------------------------
    def encode_elem(self, a) -> bytes:
        return int(a % self.q).to_bytes(self.element_len, "big")

    def decode_elem(self, data: bytes):
        if len(data) != self.element_len:
            raise DecodeError(f"expected {self.element_len} bytes, got {len(data)}")
        v = int.from_bytes(data, "big")
        if v >= self.q:
            raise DecodeError("element out of range")
        return v

    def encode_gt(self, x) -> bytes:
        return int(x % self.p).to_bytes(self.gt_len, "big")

    def decode_gt(self, data: bytes):
        if len(data) != self.gt_len:
            raise DecodeError(f"expected {self.gt_len} bytes, got {len(data)}")
        v = int.from_bytes(data, "big")
        if not 1 <= v < self.p:
            raise DecodeError("GT element out of range")
        return v

    # -- hashing and randomness -------------------------------------------
    def hash_to_group(self, data: bytes):
        if not data:
            raise ValueError("hash_to_group input must be nonempty")
        ctr = 0
        while True:
            digest = hashlib.sha256(b"H1:" + data + ctr.to_bytes(4, "big")).digest()
            v = int.from_bytes(digest, "big") % self.q
            if v != 0:
                return v
            ctr += 1

    def random_scalar(self, rng) -> int:
        return rng.randrange(1, self.q)


# Default toy parameters: a Sophie Germain pair near 2**31 so that hash
# collisions are rare enough for demos, while staying obviously breakable.
TOY_DEFAULT_Q = 2147483693
TOY_DEFAULT_P = 4294967387
TOY_DEFAULT_G = 4


def toy_engine(q: int = TOY_DEFAULT_Q, p: int = TOY_DEFAULT_P, g: int = TOY_DEFAULT_G) -> ToyEngine:
    """Build the insecure toy engine; see ToyEngine for the construction."""
    return ToyEngine(q, p, g)


# -- protocol hash functions ------------------------------------------------

def h1_to_group(engine, data: bytes):
    """Deterministic map from bytes to a non-identity element of G."""
    return engine.hash_to_group(data)


def h2_to_scalar(engine, data: bytes) -> int:
    """Deterministic map from bytes to a scalar in [1, q)."""
    digest = hashlib.sha256(b"H2:" + data).digest()
    return int.from_bytes(digest, "big") % (engine.q - 1) + 1


def h3_mask(data: bytes) -> bytes:
    """Fixed 32-byte masking digest."""
    return hashlib.sha256(b"H3:" + data).digest()


def h4_expand(seed: bytes, out_len: int) -> bytes:
    """Counter-mode keystream expansion of ``seed`` to exactly out_len bytes.

    Output for a shorter length is a prefix of the output for a longer one.
    """
    if out_len <= 0:
        raise ValueError("out_len must be positive")
    blocks = []
    for i in range((out_len + 31) // 32):
        blocks.append(hashlib.sha256(b"H4:" + seed + i.to_bytes(4, "big")).digest())
    return b"".join(blocks)[:out_len]


def h5_bind(engine, parts) -> int:
    """Hash an ordered list of byte strings into [1, q).

    Each part is length-prefixed before concatenation so distinct lists can
    never produce the same input stream.
    """
    buf = bytearray(b"H5:")
    for part in parts:
        buf += len(part).to_bytes(4, "big")
        buf += part
    digest = hashlib.sha256(bytes(buf)).digest()
    return int.from_bytes(digest, "big") % (engine.q - 1) + 1


def encode_scalar(engine, k: int) -> bytes:
    return int(k % engine.q).to_bytes(engine.scalar_len, "big")


def decode_scalar(engine, data: bytes) -> int:
    if len(data) != engine.scalar_len:
        raise DecodeError(f"expected {engine.scalar_len} bytes, got {len(data)}")
    v = int.from_bytes(data, "big")
    if v >= engine.q:
        raise DecodeError("scalar out of range")
    return v
