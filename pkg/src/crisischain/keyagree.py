"""Diffie-Hellman session establishment and sealed key delivery.

The key server and a staff device each draw an ephemeral scalar, exchange
public points over the in-band channel and derive the same 32-byte session
key from the shared point.  Private key material then travels inside a
SealedKeyMaterial blob: a stream cipher keyed by the session key plus a
keyed digest that is checked before any byte of the body is interpreted.

The stream cipher is pluggable.  The default keystream is the protocol's
own expansion hash over key and nonce, which keeps the whole path
deterministic and dependency-free; a hardware-oriented cipher can be
swapped in behind the same seal/open functions.
"""

from __future__ import annotations

import hmac
import hashlib
from dataclasses import dataclass, field

from .bilinear import DecodeError, h3_mask, h4_expand

NONCE_LEN = 12
TAG_LEN = 32


class SealRejected(Exception):
    """Tag verification failed; the sealed body was not opened."""


@dataclass(frozen=True)
class DhParams:
    """Cyclic group of prime order with a fixed base point (any engine)."""

    engine: object

    @property
    def P(self):
        return self.engine.P


@dataclass(frozen=True)
class DhKeyPair:
    sk: int = field(repr=False)
    pk: object


@dataclass(frozen=True, repr=False)
class SessionKey:
    key: bytes

    def __repr__(self):
        return "SessionKey(key=<hidden>)"


@dataclass(frozen=True)
class SealedKeyMaterial:
    nonce: bytes
    tag: bytes
    body: bytes


def dh_keygen(params: DhParams, rng) -> DhKeyPair:
    """Fresh ephemeral key pair: sk uniform in [1, q), pk = sk * P."""
    sk = params.engine.random_scalar(rng)
    return DhKeyPair(sk, params.engine.scalar_mul(sk, params.P))


def dh_shared(params: DhParams, mine: DhKeyPair, theirs_pk) -> SessionKey:
    """Session key from our secret and the peer's public point.

    Both honest sides compute the same key.  The identity point is refused
    (a degenerate peer value would fix the shared secret).
    """
    e = params.engine
    if e.is_identity(theirs_pk):
        raise ValueError("peer public key is the identity element")
    shared = e.scalar_mul(mine.sk, theirs_pk)
    if e.is_identity(shared):
        raise ValueError("degenerate shared point")
    return SessionKey(h3_mask(e.encode_elem(shared)))


def confirmation_tag(sk: SessionKey) -> bytes:
    """Short keyed digest both sides compare to confirm the exchange."""
    return hmac.new(sk.key, b"confirm", hashlib.sha256).digest()[:8]


def _default_keystream(key: bytes, nonce: bytes, length: int) -> bytes:
    return h4_expand(key + nonce, length)


def seal(sk: SessionKey, plaintext: bytes, nonce: bytes, keystream=_default_keystream) -> SealedKeyMaterial:
    """Encrypt-then-mac under the session key.

    The caller must never reuse a nonce with the same key; that contract is
    not detectable here.
    """
    if len(nonce) != NONCE_LEN:
        raise ValueError(f"nonce must be {NONCE_LEN} bytes")
    if plaintext:
        body = bytes(a ^ b for a, b in zip(plaintext, keystream(sk.key, nonce, len(plaintext))))
    else:
        body = b""
    tag = hmac.new(sk.key, nonce + body, hashlib.sha256).digest()
    return SealedKeyMaterial(nonce, tag, body)


def open_sealed(sk: SessionKey, sealed: SealedKeyMaterial, keystream=_default_keystream) -> bytes:
    """Verify the tag, then decrypt.  Raises SealRejected on any mismatch."""
    expect = hmac.new(sk.key, sealed.nonce + sealed.body, hashlib.sha256).digest()
    if not hmac.compare_digest(expect, sealed.tag):
        raise SealRejected("tag mismatch")
    if not sealed.body:
        return b""
    ks = keystream(sk.key, sealed.nonce, len(sealed.body))
    return bytes(a ^ b for a, b in zip(sealed.body, ks))


def encode_sealed(sealed: SealedKeyMaterial) -> bytes:
    """nonce(12) || taglen(1)=32 || tag(32) || body length-prefixed."""
    return (
        sealed.nonce
        + bytes([TAG_LEN])
        + sealed.tag
        + len(sealed.body).to_bytes(4, "big")
        + sealed.body
    )


def decode_sealed(data: bytes) -> SealedKeyMaterial:
    if len(data) < NONCE_LEN + 1 + TAG_LEN + 4:
        raise DecodeError("sealed blob too short")
    nonce = data[:NONCE_LEN]
    if data[NONCE_LEN] != TAG_LEN:
        raise DecodeError("unsupported tag length")
    tag = data[NONCE_LEN + 1 : NONCE_LEN + 1 + TAG_LEN]
    off = NONCE_LEN + 1 + TAG_LEN
    n = int.from_bytes(data[off : off + 4], "big")
    body = data[off + 4 :]
    if len(body) != n:
        raise DecodeError("body length mismatch")
    return SealedKeyMaterial(nonce, tag, body)
