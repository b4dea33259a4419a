"""Device-to-device communication plane over simulated short-range radios.

Neighbor discovery runs over connectionless beacon frames sized for a BLE
advertising payload: the node's identity plus a truncated fingerprint of
the event it is working.  A received identity only becomes a send target
once it appears in the event contract's participant list; unknown
identities are kept unverified and rechecked when the roster refreshes.

Message delivery picks a channel from the two simulated radios: Wi-Fi
Direct (200 m, 250 Mbps) is preferred for point-to-point traffic, BLE
(60 m, 25 Mbps) is the fallback and the broadcast medium.  The radios are
range-limited queues owned by a shared RadioEnvironment; every frame that
crosses them is a signcrypted envelope behind a tiny transport header, so
no plaintext ever touches the wire.

Receiving reverses the pipe: parse the header, decode the envelope, and
unsigncrypt with the node's event keys.  Frames that fail verification
are counted and dropped, never surfaced as messages.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field

from . import ibsc
from .bilinear import DecodeError
from .ibsc import SigncryptionReject

BEACON_MAX_LEN = 31
IDENTITY_MAX_LEN = 23
EVENT_FP_LEN = 8

WIFI_DIRECT_RANGE_M = 200.0
BLE_RANGE_M = 60.0
WIFI_DIRECT_RATE_BPS = 250e6
BLE_RATE_BPS = 25e6

CHANNEL_WIFI_DIRECT = "wifi-direct"
CHANNEL_BLE = "ble"
CHANNEL_NONE = "none"

_CHANNEL_CODES = {CHANNEL_WIFI_DIRECT: 1, CHANNEL_BLE: 2}
_CHANNEL_NAMES = {v: k for k, v in _CHANNEL_CODES.items()}
_KIND_CODES = {"text": 0, "image": 1, "audio": 2}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}


class CommsError(Exception):
    pass


class PeerUnverified(CommsError):
    pass


class NoVerifiedPeers(CommsError):
    pass


class ChannelUnavailable(CommsError):
    pass


# -- beacons -------------------------------------------------------------------

@dataclass(frozen=True)
class BeaconFrame:
    identity: bytes
    event_fp: bytes


def event_fingerprint(event_id: bytes) -> bytes:
    return hashlib.sha256(b"beacon-fp:" + event_id).digest()[:EVENT_FP_LEN]


def beacon_encode(identity: bytes, event_id: bytes) -> bytes:
    """Identity followed by the 8-byte event fingerprint, 31 bytes max."""
    if not identity:
        raise ValueError("identity must be nonempty")
    if len(identity) > IDENTITY_MAX_LEN:
        raise ValueError(f"identity exceeds {IDENTITY_MAX_LEN} bytes")
    return identity + event_fingerprint(event_id)


def beacon_decode(data: bytes) -> BeaconFrame:
    if len(data) < 1 + EVENT_FP_LEN:
        raise DecodeError("beacon frame too short")
    if len(data) > BEACON_MAX_LEN:
        raise DecodeError("beacon frame exceeds the advertising budget")
    return BeaconFrame(data[:-EVENT_FP_LEN], data[-EVENT_FP_LEN:])


# -- neighbor table --------------------------------------------------------------

@dataclass
class NeighborEntry:
    last_seen: float
    verified: bool
    distance_m: float | None = None


class NeighborTable:
    def __init__(self):
        self.entries: dict[bytes, NeighborEntry] = {}

    def ingest(self, frame: BeaconFrame, contract_ids, now: float, distance_m=None):
        """Record a heard beacon; verified only when the contract lists it."""
        verified = frame.identity.decode(errors="replace") in contract_ids
        entry = self.entries.get(frame.identity)
        if entry is None:
            self.entries[frame.identity] = NeighborEntry(now, verified, distance_m)
        else:
            entry.last_seen = max(entry.last_seen, now)
            entry.verified = verified
            if distance_m is not None:
                entry.distance_m = distance_m

    def reverify(self, contract_ids):
        """Re-check unverified identities after a roster refresh."""
        for ident, entry in self.entries.items():
            entry.verified = ident.decode(errors="replace") in contract_ids

    def verified_ids(self) -> list[bytes]:
        return [i for i, e in self.entries.items() if e.verified]


# -- channel selection -------------------------------------------------------------

@dataclass(frozen=True)
class ChannelDecision:
    mode: str
    reason: str


def select_channel(distance_m, wifi_available: bool, ble_available: bool) -> ChannelDecision:
    """Prefer Wi-Fi Direct inside 200 m, fall back to BLE inside 60 m.

    Unknown distance picks the best available radio optimistically; the
    range check at delivery time is what ultimately gates it.
    """
    if distance_m is None:
        if wifi_available:
            return ChannelDecision(CHANNEL_WIFI_DIRECT, "unknown distance, optimistic")
        if ble_available:
            return ChannelDecision(CHANNEL_BLE, "unknown distance, optimistic")
        return ChannelDecision(CHANNEL_NONE, "no radio available")
    if distance_m < 0:
        raise ValueError("distance must be non-negative")
    if wifi_available and distance_m <= WIFI_DIRECT_RANGE_M:
        return ChannelDecision(CHANNEL_WIFI_DIRECT, "within wifi-direct range")
    if ble_available and distance_m <= BLE_RANGE_M:
        return ChannelDecision(CHANNEL_BLE, "within ble range")
    if not wifi_available and not ble_available:
        return ChannelDecision(CHANNEL_NONE, "no radio available")
    return ChannelDecision(CHANNEL_NONE, "peer out of range")


def channel_range_m(channel: str) -> float:
    return WIFI_DIRECT_RANGE_M if channel == CHANNEL_WIFI_DIRECT else BLE_RANGE_M


def transfer_delay_s(channel: str, size_bytes: int) -> float:
    rate = WIFI_DIRECT_RATE_BPS if channel == CHANNEL_WIFI_DIRECT else BLE_RATE_BPS
    return size_bytes * 8 / rate


# -- simulated radio environment ------------------------------------------------------

class RadioEnvironment:
    """Shared world model: node positions, frame queues and a wire log.

    Delivery is range-gated per channel.  The wire log keeps every frame
    that crossed the air, which lets tests assert that nothing readable
    ever leaves a node.
    """

    def __init__(self, clock=time.time):
        self.clock = clock
        self.positions: dict[bytes, tuple] = {}
        self.queues: dict[bytes, list] = {}
        self.wire_log: list[tuple] = []

    def register(self, node_id: bytes, position):
        self.positions[node_id] = (float(position[0]), float(position[1]))
        self.queues.setdefault(node_id, [])

    def move(self, node_id: bytes, position):
        self.positions[node_id] = (float(position[0]), float(position[1]))

    def distance_m(self, a: bytes, b: bytes) -> float:
        (x1, y1), (x2, y2) = self.positions[a], self.positions[b]
        return ((x1 - x2) ** 2 + (y1 - y2) ** 2) ** 0.5

    def send(self, src: bytes, dst: bytes, channel: str, frame: bytes) -> bool:
        if dst not in self.positions:
            return False
        if self.distance_m(src, dst) > channel_range_m(channel):
            return False
        self.wire_log.append((src, dst, channel, frame))
        self.queues[dst].append((src, frame))
        return True

    def emit_beacon(self, src: bytes, beacon: bytes) -> list[bytes]:
        """BLE-style connectionless broadcast; returns who heard it."""
        heard = []
        for node_id in self.positions:
            if node_id == src:
                continue
            if self.distance_m(src, node_id) <= BLE_RANGE_M:
                self.wire_log.append((src, node_id, CHANNEL_BLE, beacon))
                heard.append(node_id)
        return heard

    def drain(self, node_id: bytes) -> list:
        frames = self.queues.get(node_id, [])
        self.queues[node_id] = []
        return frames


# -- node context and the chat pipeline -------------------------------------------------

@dataclass
class ChatMessage:
    sender_id: bytes
    event_id: bytes
    mode: str
    payload_kind: str
    body: bytes


@dataclass
class DeliveryReceipt:
    delivered: list = field(default_factory=list)      # (peer, channel)
    undeliverable: list = field(default_factory=list)  # (peer, reason)


class NodeContext:
    """One participant device: keys, neighbor table, inbox and counters."""

    def __init__(self, params, keys: ibsc.EventKeys, env: RadioEnvironment,
                 position=(0.0, 0.0), rng=None, wifi_available=True, ble_available=True):
        self.params = params
        self.keys = keys
        self.identity = keys.id
        self.env = env
        self.rng = rng
        self.wifi_available = wifi_available
        self.ble_available = ble_available
        self.neighbors = NeighborTable()
        self.roster: list[str] = []
        self.inbox: list[ChatMessage] = []
        self.rejected = 0
        self.malformed = 0
        env.register(self.identity, position)

    def beacon_bytes(self) -> bytes:
        return beacon_encode(self.identity, self.keys.ctx.event_id)

    def emit_beacon(self):
        return self.env.emit_beacon(self.identity, self.beacon_bytes())

    def hear_beacon(self, src: bytes, data: bytes):
        frame = beacon_decode(data)
        distance = None
        if src in self.env.positions:
            distance = self.env.distance_m(self.identity, src)
        self.neighbors.ingest(frame, self.roster, self.env.clock(), distance)

    def set_roster(self, contract_ids):
        """Install the contract's participant list and re-verify neighbors."""
        self.roster = list(contract_ids)
        self.neighbors.reverify(self.roster)


def exchange_beacons(nodes):
    """Every node beacons once and every in-range node ingests it."""
    by_id = {n.identity: n for n in nodes}
    for node in nodes:
        data = node.beacon_bytes()
        for heard_by in node.emit_beacon():
            if heard_by in by_id:
                by_id[heard_by].hear_beacon(node.identity, data)


def _frame(channel: str, payload_kind: str, envelope: bytes, now: float) -> bytes:
    return (
        bytes([_CHANNEL_CODES[channel]])
        + int(now * 1000).to_bytes(8, "big")
        + bytes([_KIND_CODES[payload_kind]])
        + envelope
    )


def _unframe(data: bytes):
    if len(data) < 10:
        raise DecodeError("transport frame too short")
    channel = _CHANNEL_NAMES.get(data[0])
    if channel is None:
        raise DecodeError("unknown channel code")
    kind = _KIND_NAMES.get(data[9])
    if kind is None:
        raise DecodeError("unknown payload kind")
    return channel, kind, data[10:]


def send_p2p(node: NodeContext, peer_id: bytes, body: bytes, payload_kind: str = "text") -> DeliveryReceipt:
    """Signcrypt for one verified peer and deliver over the chosen channel."""
    entry = node.neighbors.entries.get(peer_id)
    if entry is None or not entry.verified:
        raise PeerUnverified(peer_id.decode(errors="replace"))
    distance = None
    if peer_id in node.env.positions:
        distance = node.env.distance_m(node.identity, peer_id)
    decision = select_channel(distance, node.wifi_available, node.ble_available)
    if decision.mode == CHANNEL_NONE:
        raise ChannelUnavailable(decision.reason)
    env_bytes = ibsc.encode_envelope(
        node.params.engine,
        ibsc.signcrypt_p2p(node.params, node.keys, peer_id, body, node.rng),
    )
    frame = _frame(decision.mode, payload_kind, env_bytes, node.env.clock())
    receipt = DeliveryReceipt()
    if node.env.send(node.identity, peer_id, decision.mode, frame):
        receipt.delivered.append((peer_id, decision.mode))
    else:
        receipt.undeliverable.append((peer_id, "out of range"))
    return receipt


def send_broadcast(node: NodeContext, body: bytes, payload_kind: str = "text") -> DeliveryReceipt:
    """Signcrypt for all verified neighbors and fan out over BLE."""
    targets = node.neighbors.verified_ids()
    if not targets:
        raise NoVerifiedPeers("no verified neighbors to broadcast to")
    if not node.ble_available:
        raise ChannelUnavailable("broadcast requires the ble radio")
    envelope = ibsc.signcrypt_broadcast(node.params, node.keys, targets, body, node.rng)
    env_bytes = ibsc.encode_envelope(node.params.engine, envelope)
    frame = _frame(CHANNEL_BLE, payload_kind, env_bytes, node.env.clock())
    receipt = DeliveryReceipt()
    for peer in targets:
        if node.env.send(node.identity, peer, CHANNEL_BLE, frame):
            receipt.delivered.append((peer, CHANNEL_BLE))
        else:
            receipt.undeliverable.append((peer, "out of range"))
    return receipt


def receive(node: NodeContext, frame: bytes) -> ChatMessage:
    """Decode and unsigncrypt one frame.

    Raises DecodeError for malformed bytes and SigncryptionReject for
    authentic-looking frames that fail verification; the two are kept
    distinct for diagnostics.
    """
    channel, kind, env_bytes = _unframe(frame)
    envelope = ibsc.decode_envelope(node.params.engine, env_bytes)
    if isinstance(envelope, ibsc.P2PEnvelope):
        body = ibsc.unsigncrypt_p2p(node.params, node.keys, envelope.sender_id, envelope)
        mode = "p2p"
    else:
        body = ibsc.unsigncrypt_broadcast(node.params, node.keys, envelope.sender_id, envelope)
        mode = "broadcast"
    return ChatMessage(envelope.sender_id, envelope.event_id, mode, kind, body)


def poll(node: NodeContext) -> list[ChatMessage]:
    """Drain the radio queue into the inbox, counting rejected frames."""
    fresh = []
    for _, frame in node.env.drain(node.identity):
        try:
            msg = receive(node, frame)
        except SigncryptionReject:
            node.rejected += 1
        except DecodeError:
            node.malformed += 1
        else:
            node.inbox.append(msg)
            fresh.append(msg)
    return fresh
