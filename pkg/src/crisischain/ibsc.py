"""Identity-based signcryption for event-scoped communication.

A trusted key server (the PKG) runs setup once, holding a master secret
msk with public counterpart mpk = msk * P.  Every participant identity
maps to a public key Q = H1(id) with private key S = msk * Q, and every
(identity, event, location) triple maps to event-scoped keys the same way.

Two modes are provided:

* P2P: single-receiver signcryption.  The envelope carries (c, T, U);
  the receiver recovers the message and checks one pairing equation that
  binds ciphertext, sender identity and event context.

* Broadcast: multi-receiver signcryption.  Per-receiver mask values v_i
  are roots of a transmitted monic polynomial whose constant offset hides
  the seed that keys the ciphertext; only listed receivers can evaluate
  the polynomial back to that offset.  The envelope carries
  (c, T, U, V, W, X, a_0..a_{n-1}) and two pairing checks: a public one
  anybody can run, and a per-receiver one requiring the private key.

  The recovered seed is confirmed against a digest folded into the
  ciphertext; a holder of valid event keys who is not a listed receiver
  passes both pairing checks but evaluates the polynomial to a wrong
  offset, fails the confirmation and gets a rejection instead of garbage.

All rejections raise SigncryptionReject (distinct from DecodeError, which
signals malformed bytes rather than failed verification).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from . import bilinear
from .bilinear import DecodeError, SEED_LEN, h2_to_scalar, h3_mask, h4_expand, h5_bind

MAX_MESSAGE_LEN = 64 * 1024
ENVELOPE_MAGIC = b"IBSC"
ENVELOPE_VERSION = 1
MODE_P2P = 0x01
MODE_BROADCAST = 0x02

_CONFIRM_PREFIX = b"BCCONF:"


class SigncryptionReject(Exception):
    """Verification failed; the envelope must not be surfaced as a message."""


@dataclass(frozen=True)
class SystemParams:
    """Public group description: engine, generator and master public key."""

    engine: object
    P: object
    mpk: object

    def fingerprint(self) -> str:
        h = hashlib.sha256(
            self.engine.name.encode()
            + self.engine.encode_elem(self.P)
            + self.engine.encode_elem(self.mpk)
        )
        return h.hexdigest()[:16]


@dataclass(frozen=True, repr=False)
class MasterKey:
    msk: int

    def __repr__(self):  # keep the secret out of logs and tracebacks
        return "MasterKey(msk=<hidden>)"


@dataclass(frozen=True)
class IdentityKeys:
    id: bytes
    Q: object
    S: object = field(repr=False)


@dataclass(frozen=True)
class EventContext:
    """Unique event identifier plus its location, bound into all event keys."""

    event_id: bytes
    lat: float
    lon: float

    def __post_init__(self):
        if not self.event_id:
            raise ValueError("event_id must be nonempty")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError("lat out of range")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError("lon out of range")

    def coordinate_bytes(self) -> bytes:
        # fixed-point rendering with exactly six decimals keeps the key
        # derivation bit-reproducible across implementations
        return f"{self.lat:.6f},{self.lon:.6f}".encode()


@dataclass(frozen=True)
class EventKeys:
    ctx: EventContext
    id: bytes
    Q: object
    S: object = field(repr=False)


@dataclass(frozen=True)
class P2PEnvelope:
    sender_id: bytes
    event_id: bytes
    c: bytes
    T: object
    U: object


@dataclass(frozen=True)
class BroadcastEnvelope:
    sender_id: bytes
    event_id: bytes
    c: bytes
    T: object
    U: object
    W: object
    X: object
    V: bytes
    coeffs: tuple


def _as_bytes(ident) -> bytes:
    return ident.encode() if isinstance(ident, str) else bytes(ident)


def _xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b))


def _confirmation(seed: bytes, message: bytes) -> bytes:
    return hashlib.sha256(_CONFIRM_PREFIX + seed + message).digest()


# -- key management ----------------------------------------------------------

def setup(engine, rng) -> tuple[SystemParams, MasterKey]:
    """PKG initialization: draw msk and publish mpk = msk * P."""
    msk = engine.random_scalar(rng)
    mpk = engine.scalar_mul(msk, engine.P)
    return SystemParams(engine, engine.P, mpk), MasterKey(msk)


def extract(params: SystemParams, master: MasterKey, ident) -> IdentityKeys:
    """Derive (Q, S) for a public identifier.  PKG side only."""
    ident = _as_bytes(ident)
    if not ident:
        raise ValueError("identity must be nonempty")
    q = bilinear.h1_to_group(params.engine, ident)
    return IdentityKeys(ident, q, params.engine.scalar_mul(master.msk, q))


def _event_h1_input(ident: bytes, ctx: EventContext) -> bytes:
    # length prefixes remove concatenation ambiguity between id and event_id
    return (
        len(ident).to_bytes(4, "big")
        + ident
        + len(ctx.event_id).to_bytes(4, "big")
        + ctx.event_id
        + ctx.coordinate_bytes()
    )


def derive_event_public(params: SystemParams, ident, ctx: EventContext):
    """Event-scoped public key of any participant, from pre-shared data only."""
    ident = _as_bytes(ident)
    if not ident:
        raise ValueError("identity must be nonempty")
    return bilinear.h1_to_group(params.engine, _event_h1_input(ident, ctx))


def derive_event_keys(params: SystemParams, master: MasterKey, ident, ctx: EventContext) -> EventKeys:
    """Event-scoped key pair.  PKG side; delivered over the key-agreement channel."""
    ident = _as_bytes(ident)
    q = derive_event_public(params, ident, ctx)
    return EventKeys(ctx, ident, q, params.engine.scalar_mul(master.msk, q))


def verify_key_pair(params: SystemParams, Q, S) -> bool:
    """The sanity check a client runs on key delivery: e(S, P) == e(Q, mpk)."""
    e = params.engine
    return e.pair(S, params.P) == e.pair(Q, params.mpk)


# -- P2P mode ----------------------------------------------------------------

def signcrypt_p2p(params: SystemParams, sender: EventKeys, receiver_id, message: bytes, rng) -> P2PEnvelope:
    """Sign and encrypt a message for a single receiver in the same event."""
    if not message:
        raise ValueError("message must be nonempty")
    if len(message) > MAX_MESSAGE_LEN:
        raise ValueError("message exceeds the 64 KiB envelope cap")
    e = params.engine
    receiver_id = _as_bytes(receiver_id)
    q_recv = derive_event_public(params, receiver_id, sender.ctx)

    x = e.random_scalar(rng)
    t = e.scalar_mul(x, params.P)
    r = h2_to_scalar(e, e.encode_elem(t) + message)
    w = e.scalar_mul(x, params.mpk)
    u = e.add(e.scalar_mul(r, sender.S), w)
    y = e.pair(w, q_recv)
    keystream = h4_expand(h3_mask(e.encode_gt(y)), len(message))
    return P2PEnvelope(
        sender_id=sender.id,
        event_id=sender.ctx.event_id,
        c=_xor(keystream, message),
        T=t,
        U=u,
    )


def unsigncrypt_p2p(params: SystemParams, receiver: EventKeys, sender_id, env: P2PEnvelope) -> bytes:
    """Decrypt and verify a P2P envelope; raises SigncryptionReject on failure."""
    e = params.engine
    sender_id = _as_bytes(sender_id)
    if env.sender_id != sender_id:
        raise SigncryptionReject("envelope does not declare the expected sender")
    if env.event_id != receiver.ctx.event_id:
        raise SigncryptionReject("envelope bound to a different event")
    if e.is_identity(env.T):
        raise SigncryptionReject("degenerate ephemeral point")

    y = e.pair(receiver.S, env.T)
    keystream = h4_expand(h3_mask(e.encode_gt(y)), len(env.c))
    message = _xor(keystream, env.c)
    r = h2_to_scalar(e, e.encode_elem(env.T) + message)
    q_send = derive_event_public(params, sender_id, receiver.ctx)

    lhs = e.pair(env.U, params.P)
    rhs = e.gt_mul(e.gt_pow(e.pair(q_send, params.mpk), r), e.pair(env.T, params.mpk))
    if lhs != rhs:
        raise SigncryptionReject("signature verification failed")
    return message


# -- broadcast mode ------------------------------------------------------------

class MaskCollision(Exception):
    """Two receivers hashed to the same polynomial root; retry exhausted."""


def expand_mask_polynomial(roots, offset: int, q: int) -> list[int]:
    """Coefficients a_0..a_{n-1} of prod(x - v_i) + offset, monic lead implicit."""
    coeffs = [1]
    for v in roots:
        nxt = [0] * (len(coeffs) + 1)
        for i, c in enumerate(coeffs):
            nxt[i + 1] = (nxt[i + 1] + c) % q
            nxt[i] = (nxt[i] - c * v) % q
        coeffs = nxt
    coeffs[0] = (coeffs[0] + offset) % q
    return coeffs[:-1]  # the leading 1 is implicit


def eval_mask_polynomial(coeffs, v: int, q: int) -> int:
    """Horner evaluation of the monic polynomial with transmitted low terms."""
    acc = 1
    for a in reversed(coeffs):
        acc = (acc * v + a) % q
    return acc


def _receiver_masks(params: SystemParams, ctx: EventContext, receiver_ids, j) -> list[int]:
    e = params.engine
    masks = []
    for rid in receiver_ids:
        q_i = derive_event_public(params, rid, ctx)
        masks.append(h2_to_scalar(e, e.encode_gt(e.pair(q_i, j))))
    return masks


def signcrypt_broadcast(params: SystemParams, sender: EventKeys, receiver_ids, message: bytes, rng) -> BroadcastEnvelope:
    """Sign and encrypt one message for every listed receiver.

    The sender may include itself; receiver ids must be pairwise distinct.
    """
    if not message:
        raise ValueError("message must be nonempty")
    if len(message) > MAX_MESSAGE_LEN:
        raise ValueError("message exceeds the 64 KiB envelope cap")
    receiver_ids = [_as_bytes(rid) for rid in receiver_ids]
    if not receiver_ids:
        raise ValueError("receiver list must be nonempty")
    if len(set(receiver_ids)) != len(receiver_ids):
        raise ValueError("receiver ids must be pairwise distinct")

    e = params.engine
    r_prime = e.random_scalar(rng)
    # mask values can collide in tiny test groups: re-draw the shared
    # randomness once, then give up with an explicit error
    for attempt in range(2):
        r = e.random_scalar(rng)
        j = e.scalar_mul(r, params.mpk)
        masks = _receiver_masks(params, sender.ctx, receiver_ids, j)
        if len(set(masks)) == len(masks):
            break
    else:
        raise MaskCollision("duplicate receiver mask after retry")

    t = e.scalar_mul(r, sender.Q)
    u = e.scalar_mul(r, params.P)
    x_elem = e.scalar_mul(r_prime, t)

    offset = e.random_scalar(rng)
    seed = rng.randbytes(SEED_LEN)
    coeffs = expand_mask_polynomial(masks, offset, e.q)
    v_mask = _xor(seed, h3_mask(bilinear.encode_scalar(e, offset)))
    keystream = h4_expand(seed, len(message) + SEED_LEN)
    c = _xor(keystream, message + _confirmation(seed, message))

    h = h5_bind(
        e,
        [c, e.encode_elem(x_elem), e.encode_elem(u), v_mask]
        + [bilinear.encode_scalar(e, a) for a in coeffs],
    )
    w = e.scalar_mul((r_prime + h) * r % e.q, sender.S)
    return BroadcastEnvelope(
        sender_id=sender.id,
        event_id=sender.ctx.event_id,
        c=c,
        T=t,
        U=u,
        W=w,
        X=x_elem,
        V=v_mask,
        coeffs=tuple(coeffs),
    )


def unsigncrypt_broadcast(params: SystemParams, receiver: EventKeys, sender_id, env: BroadcastEnvelope) -> bytes:
    """Decrypt and verify a broadcast envelope as one of its receivers."""
    e = params.engine
    if env.sender_id != _as_bytes(sender_id):
        raise SigncryptionReject("envelope does not declare the expected sender")
    if env.event_id != receiver.ctx.event_id:
        raise SigncryptionReject("envelope bound to a different event")
    if len(env.c) < 1 + SEED_LEN:
        raise SigncryptionReject("ciphertext too short")

    h = h5_bind(
        e,
        [env.c, e.encode_elem(env.X), e.encode_elem(env.U), env.V]
        + [bilinear.encode_scalar(e, a) for a in env.coeffs],
    )
    anchor = e.add(env.X, e.scalar_mul(h, env.T))
    anchor_mpk = e.pair(anchor, params.mpk)
    if e.pair(env.W, params.P) != anchor_mpk:
        raise SigncryptionReject("public verification failed")

    q_self = derive_event_public(params, receiver.id, receiver.ctx)
    if e.pair(env.W, q_self) != e.pair(anchor, receiver.S):
        raise SigncryptionReject("receiver verification failed")

    y = e.pair(receiver.S, env.U)
    v = h2_to_scalar(e, e.encode_gt(y))
    offset = eval_mask_polynomial(env.coeffs, v, e.q)
    seed = _xor(env.V, h3_mask(bilinear.encode_scalar(e, offset)))
    plain = _xor(h4_expand(seed, len(env.c)), env.c)
    message, tag = plain[:-SEED_LEN], plain[-SEED_LEN:]
    if tag != _confirmation(seed, message):
        raise SigncryptionReject("not a listed receiver of this envelope")
    return message


# -- wire format ---------------------------------------------------------------

def _pack_prefixed(data: bytes, width: int) -> bytes:
    return len(data).to_bytes(width, "big") + data


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise DecodeError("truncated envelope")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def take_prefixed(self, width: int) -> bytes:
        n = int.from_bytes(self.take(width), "big")
        return self.take(n)

    def done(self):
        if self.pos != len(self.data):
            raise DecodeError("trailing bytes after envelope")


def encode_envelope(engine, env) -> bytes:
    """Binary envelope: magic, version, mode, ids, then the mode body."""
    if isinstance(env, P2PEnvelope):
        mode, body = MODE_P2P, (
            engine.encode_elem(env.T) + engine.encode_elem(env.U) + _pack_prefixed(env.c, 4)
        )
    elif isinstance(env, BroadcastEnvelope):
        mode = MODE_BROADCAST
        body = (
            engine.encode_elem(env.T)
            + engine.encode_elem(env.U)
            + engine.encode_elem(env.W)
            + engine.encode_elem(env.X)
            + env.V
            + len(env.coeffs).to_bytes(2, "big")
            + b"".join(bilinear.encode_scalar(engine, a) for a in env.coeffs)
            + _pack_prefixed(env.c, 4)
        )
    else:
        raise TypeError(f"not an envelope: {type(env).__name__}")
    return (
        ENVELOPE_MAGIC
        + bytes([ENVELOPE_VERSION, mode])
        + _pack_prefixed(env.sender_id, 2)
        + _pack_prefixed(env.event_id, 2)
        + body
    )


def decode_envelope(engine, data: bytes):
    """Parse an envelope; raises DecodeError (never SigncryptionReject)."""
    rd = _Reader(data)
    if rd.take(4) != ENVELOPE_MAGIC:
        raise DecodeError("bad magic")
    version, mode = rd.take(1)[0], rd.take(1)[0]
    if version != ENVELOPE_VERSION:
        raise DecodeError(f"unsupported version {version}")
    sender_id = rd.take_prefixed(2)
    event_id = rd.take_prefixed(2)
    if mode == MODE_P2P:
        t = engine.decode_elem(rd.take(engine.element_len))
        u = engine.decode_elem(rd.take(engine.element_len))
        c = rd.take_prefixed(4)
        rd.done()
        return P2PEnvelope(sender_id, event_id, c, t, u)
    if mode == MODE_BROADCAST:
        t = engine.decode_elem(rd.take(engine.element_len))
        u = engine.decode_elem(rd.take(engine.element_len))
        w = engine.decode_elem(rd.take(engine.element_len))
        x = engine.decode_elem(rd.take(engine.element_len))
        v = rd.take(SEED_LEN)
        n = int.from_bytes(rd.take(2), "big")
        coeffs = tuple(
            bilinear.decode_scalar(engine, rd.take(engine.scalar_len)) for _ in range(n)
        )
        c = rd.take_prefixed(4)
        rd.done()
        return BroadcastEnvelope(sender_id, event_id, c, t, u, w, x, v, coeffs)
    raise DecodeError(f"unknown mode {mode:#x}")


# -- key material serialization (for sealed delivery and local storage) --------

def encode_event_keys(params: SystemParams, keys: EventKeys) -> bytes:
    e = params.engine
    parts = [
        keys.id,
        keys.ctx.event_id,
        keys.ctx.coordinate_bytes(),
        e.encode_elem(keys.Q),
        e.encode_elem(keys.S),
    ]
    return b"".join(_pack_prefixed(p, 4) for p in parts)


def decode_event_keys(params: SystemParams, data: bytes) -> EventKeys:
    rd = _Reader(data)
    ident = rd.take_prefixed(4)
    event_id = rd.take_prefixed(4)
    coords = rd.take_prefixed(4).decode()
    q = params.engine.decode_elem(rd.take_prefixed(4))
    s = params.engine.decode_elem(rd.take_prefixed(4))
    rd.done()
    lat_s, lon_s = coords.split(",")
    return EventKeys(EventContext(event_id, float(lat_s), float(lon_s)), ident, q, s)
