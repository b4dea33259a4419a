"""Permissioned event ledger: a hash-linked chain of contract transactions.

Every mutation of an event contract is a transaction appended as a block
once a quorum of registered validators (at least half, inclusive) has
signed its canonical bytes.  Blocks link by SHA-256; the genesis block
carries the registry and marks its previous hash with the literal "0000"
sentinel, zero-padded to digest width.

Event contracts hold the lifecycle state machine: Created on submission,
Verified once a nearby colleague ratifies, Inactive when aborted or
killed.  Two geographic rules apply, both great-circle distances on the
mean Earth radius: duplicate suppression (a same-kind live event within
the dedup radius is the same incident) and ratification proximity.

Contract reads are access-controlled: participant identities, their
entities, the owning entity and the generator may list participant IDs
and fetch the pre-shared data used to derive event-scoped keys.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import math
import random
import time
from dataclasses import dataclass, field, replace

EARTH_RADIUS_KM = 6371.0088
GENESIS_PREV_HASH = (b"\x00" * 28 + b"0000").hex()

EVENT_KINDS = ("fire", "climate", "seismic", "volcanic", "flooding", "pollution", "other")

STATE_CREATED = "Created"
STATE_VERIFIED = "Verified"
STATE_INACTIVE = "Inactive"
_LEGAL_TRANSITIONS = {
    (STATE_CREATED, STATE_VERIFIED),
    (STATE_CREATED, STATE_INACTIVE),
    (STATE_VERIFIED, STATE_INACTIVE),
}

DEFAULT_POLICY = "participants-and-entities"


class LedgerError(Exception):
    pass


class Unauthorized(LedgerError):
    pass


class AccessDenied(LedgerError):
    pass


class UnknownEvent(LedgerError):
    pass


class TooFar(LedgerError):
    pass


class SelfRatification(LedgerError):
    pass


class InvalidTransition(LedgerError):
    pass


class QuorumNotReached(LedgerError):
    pass


class DuplicateVote(LedgerError):
    pass


class DuplicateWorker(LedgerError):
    pass


class DuplicateEvent(LedgerError):
    """A live same-kind event already covers this location."""

    def __init__(self, existing_event_id: str):
        super().__init__(f"existing event {existing_event_id} covers this location")
        self.existing_event_id = existing_event_id


def haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in kilometers on the mean Earth radius."""
    phi1, phi2 = math.radians(lat1), math.radians(lat2)
    dphi = phi2 - phi1
    dlam = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(math.sqrt(a))


@dataclass(frozen=True)
class Registry:
    """Who may act: entities, staff membership and validator keys.

    Validator keys stay local to the ledger host; only validator ids are
    recorded on-chain.
    """

    entities: tuple
    staff: dict           # staff id -> entity id
    validators: dict      # validator id -> key (hex str)

    def __post_init__(self):
        for sid, ent in self.staff.items():
            if ent not in self.entities:
                raise ValueError(f"staff {sid!r} belongs to unknown entity {ent!r}")
        if not self.validators:
            raise ValueError("at least one validator is required")

    def entity_of(self, actor: str):
        if actor in self.entities:
            return actor
        return self.staff.get(actor)


@dataclass(frozen=True)
class Worker:
    entity: str
    user: str
    identity: str
    event_id: str

    def to_dict(self):
        return {
            "entity": self.entity,
            "user": self.user,
            "identity": self.identity,
            "event_id": self.event_id,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["entity"], d["user"], d["identity"], d["event_id"])


@dataclass
class EventContract:
    entity: str
    generator: str
    privacy_policy: str
    event_id: str
    lat: float
    lon: float
    kind: str
    risk_level: int
    state: str = STATE_CREATED
    participants: list = field(default_factory=list)

    @property
    def num_participants(self) -> int:
        return len(self.participants)

    def to_dict(self):
        return {
            "entity": self.entity,
            "generator": self.generator,
            "privacy_policy": self.privacy_policy,
            "event_id": self.event_id,
            "lat": self.lat,
            "lon": self.lon,
            "kind": self.kind,
            "risk_level": self.risk_level,
            "state": self.state,
            "participants": [w.to_dict() for w in self.participants],
            "num_participants": self.num_participants,
        }


@dataclass(frozen=True)
class PreSharedData:
    """Exactly the tuple a peer needs to derive any event-scoped public key."""

    event_id: str
    lat: float
    lon: float
    params_ref: str

    def to_dict(self):
        return {
            "event_id": self.event_id,
            "lat": self.lat,
            "lon": self.lon,
            "params_ref": self.params_ref,
        }


@dataclass(frozen=True)
class ContractTransaction:
    op: str
    actor: str
    body: dict

    def canonical_bytes(self) -> bytes:
        return json.dumps(
            {"op": self.op, "actor": self.actor, "body": self.body},
            sort_keys=True,
            separators=(",", ":"),
        ).encode()

    def digest(self) -> bytes:
        return hashlib.sha256(self.canonical_bytes()).digest()


@dataclass(frozen=True)
class Block:
    index: int
    prev_hash: str
    payload: ContractTransaction
    timestamp: int
    votes: tuple  # ((validator_id, signature_hex), ...)
    hash: str

    @staticmethod
    def compute_hash(index: int, prev_hash: str, payload: ContractTransaction, timestamp: int) -> str:
        h = hashlib.sha256(
            index.to_bytes(8, "big")
            + bytes.fromhex(prev_hash)
            + payload.canonical_bytes()
            + timestamp.to_bytes(8, "big")
        )
        return h.hexdigest()

    def to_json(self) -> str:
        return json.dumps(
            {
                "index": self.index,
                "prev_hash": self.prev_hash,
                "payload": {"op": self.payload.op, "actor": self.payload.actor, "body": self.payload.body},
                "timestamp": self.timestamp,
                "votes": [list(v) for v in self.votes],
                "hash": self.hash,
            },
            sort_keys=False,
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, line: str) -> "Block":
        d = json.loads(line)
        return cls(
            index=d["index"],
            prev_hash=d["prev_hash"],
            payload=ContractTransaction(d["payload"]["op"], d["payload"]["actor"], d["payload"]["body"]),
            timestamp=d["timestamp"],
            votes=tuple((v[0], v[1]) for v in d["votes"]),
            hash=d["hash"],
        )


@dataclass(frozen=True)
class ChainValidation:
    valid: bool
    bad_index: int | None = None


def vote_signature(validator_key_hex: str, tx: ContractTransaction) -> str:
    return hmac.new(bytes.fromhex(validator_key_hex), tx.digest(), hashlib.sha256).hexdigest()


class Ledger:
    """Single-writer chain plus the materialized contract states.

    All mutating operations serialize through one instance; reads see only
    committed blocks.  Replica behavior is modeled by replaying the block
    log into a fresh instance, which must reproduce identical bytes.
    """

    def __init__(
        self,
        registry: Registry,
        params_ref: str = "",
        dedup_radius_km: float = 5.0,
        ratify_radius_km: float = 2.0,
        clock=None,
        rng: random.Random | None = None,
        _genesis: bool = True,
    ):
        self.registry = registry
        self.params_ref = params_ref
        self.dedup_radius_km = dedup_radius_km
        self.ratify_radius_km = ratify_radius_km
        self.clock = clock or (lambda: int(time.time()))
        self.rng = rng or random.SystemRandom()
        self.blocks: list[Block] = []
        self.contracts: dict[str, EventContract] = {}
        self.emitted: list[dict] = []  # contract event log, rebuilt on replay
        if _genesis:
            tx = ContractTransaction(
                "Genesis",
                "system",
                {
                    "entities": list(registry.entities),
                    "staff": dict(sorted(registry.staff.items())),
                    "validators": sorted(registry.validators),
                    "params_ref": params_ref,
                },
            )
            self._append(tx, self._collect_votes(tx), self._now())

    # -- chain mechanics ----------------------------------------------------
    def _now(self) -> int:
        return int(self.clock())

    def quorum(self) -> int:
        v = len(self.registry.validators)
        return (v + 1) // 2  # ceil(V/2): "at least half" is inclusive

    def _collect_votes(self, tx: ContractTransaction) -> tuple:
        return tuple(
            (vid, vote_signature(self.registry.validators[vid], tx))
            for vid in sorted(self.registry.validators)
        )

    def _check_votes(self, tx: ContractTransaction, votes) -> tuple:
        seen = set()
        for vid, sig in votes:
            if vid not in self.registry.validators:
                raise Unauthorized(f"unknown validator {vid!r}")
            if vid in seen:
                raise DuplicateVote(f"validator {vid!r} voted twice")
            seen.add(vid)
            if not hmac.compare_digest(sig, vote_signature(self.registry.validators[vid], tx)):
                raise Unauthorized(f"bad vote signature from {vid!r}")
        if len(seen) < self.quorum():
            raise QuorumNotReached(f"{len(seen)} of {len(self.registry.validators)} validators; need {self.quorum()}")
        return tuple(votes)

    def _append(self, tx: ContractTransaction, votes, timestamp: int) -> Block:
        prev = self.blocks[-1].hash if self.blocks else GENESIS_PREV_HASH
        index = len(self.blocks)
        block = Block(
            index=index,
            prev_hash=prev,
            payload=tx,
            timestamp=timestamp,
            votes=tuple(votes),
            hash=Block.compute_hash(index, prev, tx, timestamp),
        )
        self.blocks.append(block)
        return block

    def append_block(self, tx: ContractTransaction, votes=None, timestamp: int | None = None) -> Block:
        """Validate quorum, link the block, and apply the transaction."""
        votes = self._collect_votes(tx) if votes is None else self._check_votes(tx, votes)
        block = self._append(tx, votes, self._now() if timestamp is None else timestamp)
        self._apply(tx)
        return block

    def validate_chain(self) -> ChainValidation:
        prev = GENESIS_PREV_HASH
        for i, block in enumerate(self.blocks):
            if (
                block.index != i
                or block.prev_hash != prev
                or block.hash != Block.compute_hash(block.index, block.prev_hash, block.payload, block.timestamp)
            ):
                return ChainValidation(False, i)
            prev = block.hash
        return ChainValidation(True, None)

    # -- contract state machine ----------------------------------------------
    def _emit(self, name: str, event_id: str):
        self.emitted.append(
            {"name": name, "event_id": event_id, "block": len(self.blocks) - 1}
        )

    def _apply(self, tx: ContractTransaction):
        op, body = tx.op, tx.body
        if op == "Genesis":
            return
        if op == "Create":
            self.contracts[body["event_id"]] = EventContract(
                entity=body["entity"],
                generator=body["generator"],
                privacy_policy=body["privacy_policy"],
                event_id=body["event_id"],
                lat=body["lat"],
                lon=body["lon"],
                kind=body["kind"],
                risk_level=body["risk_level"],
            )
            self._emit("EventGeneration", body["event_id"])
            return
        contract = self.contracts[body["event_id"]]
        if op == "Confirm":
            self._transition(contract, STATE_VERIFIED)
            self._emit("EventConfirmed", body["event_id"])
        elif op == "Abort":
            self._transition(contract, STATE_INACTIVE)
            self._emit("EventAborted", body["event_id"])
        elif op == "Kill":
            self._transition(contract, STATE_INACTIVE)
        elif op == "UpdateParticipants":
            for wd in body["workers"]:
                contract.participants.append(Worker.from_dict(wd))
        elif op == "UpdateState":
            contract.risk_level = body["risk_level"]
            if body["state"] != contract.state:
                self._transition(contract, body["state"])
        elif op == "UpdateAccess":
            contract.privacy_policy = body["privacy_policy"]
        else:
            raise LedgerError(f"unknown transaction op {op!r}")

    @staticmethod
    def _transition(contract: EventContract, new_state: str):
        if (contract.state, new_state) not in _LEGAL_TRANSITIONS:
            raise InvalidTransition(f"{contract.state} -> {new_state}")
        contract.state = new_state

    # -- helpers ---------------------------------------------------------------
    def contract(self, event_id: str) -> EventContract:
        try:
            return self.contracts[event_id]
        except KeyError:
            raise UnknownEvent(event_id) from None

    def _require_staff_entity(self, actor: str) -> str:
        ent = self.registry.entity_of(actor)
        if ent is None:
            raise Unauthorized(f"{actor!r} is not registered")
        return ent

    def _participating_entities(self, contract: EventContract) -> set:
        return {contract.entity} | {w.entity for w in contract.participants}

    def _require_owner(self, contract: EventContract, actor: str):
        if self._require_staff_entity(actor) != contract.entity:
            raise Unauthorized(f"{actor!r} does not act for {contract.entity!r}")

    def _require_participating(self, contract: EventContract, actor: str):
        if self._require_staff_entity(actor) not in self._participating_entities(contract):
            raise Unauthorized(f"{actor!r} does not act for a participating entity")

    def live_events(self):
        return [c for c in self.contracts.values() if c.state != STATE_INACTIVE]

    def last_block_hash(self, event_id: str):
        """Hash of the newest block referencing the event, None if unknown."""
        for block in reversed(self.blocks):
            if block.payload.body.get("event_id") == event_id:
                return block.hash
        return None

    # -- contract operations -----------------------------------------------------
    def create_event(self, generator: str, entity: str, location, kind: str,
                     risk_level: int, policy: str = DEFAULT_POLICY) -> EventContract:
        """Submit a new incident; duplicate locations resolve to the old event."""
        if self.registry.entity_of(generator) != entity:
            raise Unauthorized(f"{generator!r} is not registered with {entity!r}")
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        if not 1 <= int(risk_level) <= 5:
            raise ValueError("risk_level must be in 1..5")
        lat, lon = float(location[0]), float(location[1])
        for existing in self.live_events():
            if existing.kind == kind and haversine_km(lat, lon, existing.lat, existing.lon) <= self.dedup_radius_km:
                raise DuplicateEvent(existing.event_id)
        event_id = "ev-" + self.rng.getrandbits(96).to_bytes(12, "big").hex()
        while event_id in self.contracts:  # seeded rngs can repeat across runs
            event_id = "ev-" + self.rng.getrandbits(96).to_bytes(12, "big").hex()
        tx = ContractTransaction(
            "Create",
            generator,
            {
                "event_id": event_id,
                "entity": entity,
                "generator": generator,
                "lat": lat,
                "lon": lon,
                "kind": kind,
                "risk_level": int(risk_level),
                "privacy_policy": policy,
            },
        )
        self.append_block(tx)
        return self.contracts[event_id]

    def ratify(self, event_id: str, ratifier: str, ratifier_location) -> str:
        """First nearby colleague confirmation flips Created to Verified."""
        contract = self.contract(event_id)
        self._require_staff_entity(ratifier)
        if contract.state == STATE_VERIFIED:
            return contract.state  # idempotent no-op
        if contract.state != STATE_CREATED:
            raise InvalidTransition(f"cannot ratify an {contract.state} event")
        if ratifier == contract.generator:
            raise SelfRatification("the generator cannot ratify its own event")
        dist = haversine_km(
            float(ratifier_location[0]), float(ratifier_location[1]), contract.lat, contract.lon
        )
        if dist > self.ratify_radius_km:
            raise TooFar(f"{dist:.2f} km from the incident; limit {self.ratify_radius_km} km")
        tx = ContractTransaction(
            "Confirm",
            ratifier,
            {
                "event_id": event_id,
                "ratifier": ratifier,
                "lat": float(ratifier_location[0]),
                "lon": float(ratifier_location[1]),
            },
        )
        self.append_block(tx)
        return contract.state

    def abort_event(self, event_id: str, actor: str) -> str:
        contract = self.contract(event_id)
        self._require_owner(contract, actor)
        if contract.state != STATE_CREATED:
            raise InvalidTransition(f"abort requires Created, not {contract.state}")
        self.append_block(ContractTransaction("Abort", actor, {"event_id": event_id}))
        return contract.state

    def kill_event(self, event_id: str, actor: str) -> EventContract:
        contract = self.contract(event_id)
        self._require_owner(contract, actor)
        if contract.state == STATE_INACTIVE:
            raise InvalidTransition("event already inactive")
        self.append_block(ContractTransaction("Kill", actor, {"event_id": event_id}))
        return contract

    def update_participants(self, event_id: str, workers, actor: str) -> EventContract:
        contract = self.contract(event_id)
        self._require_participating(contract, actor)
        known = {w.identity for w in contract.participants}
        fresh = []
        for w in workers:
            w = replace(w, event_id=event_id)
            if not w.identity:
                raise ValueError("worker identity must be nonempty")
            if w.identity in known:
                raise DuplicateWorker(w.identity)
            known.add(w.identity)
            fresh.append(w)
        tx = ContractTransaction(
            "UpdateParticipants",
            actor,
            {"event_id": event_id, "workers": [w.to_dict() for w in fresh]},
        )
        self.append_block(tx)
        return contract

    def update_state(self, event_id: str, risk_level: int, state: str, actor: str) -> EventContract:
        contract = self.contract(event_id)
        self._require_participating(contract, actor)
        if not 1 <= int(risk_level) <= 5:
            raise ValueError("risk_level must be in 1..5")
        if state not in (STATE_CREATED, STATE_VERIFIED, STATE_INACTIVE):
            raise ValueError(f"unknown state {state!r}")
        if state != contract.state and (contract.state, state) not in _LEGAL_TRANSITIONS:
            raise InvalidTransition(f"{contract.state} -> {state}")
        tx = ContractTransaction(
            "UpdateState",
            actor,
            {"event_id": event_id, "risk_level": int(risk_level), "state": state},
        )
        self.append_block(tx)
        return contract

    def update_access(self, event_id: str, policy: str, actor: str) -> EventContract:
        contract = self.contract(event_id)
        self._require_owner(contract, actor)
        tx = ContractTransaction(
            "UpdateAccess", actor, {"event_id": event_id, "privacy_policy": policy}
        )
        self.append_block(tx)
        return contract

    # -- access-controlled reads ---------------------------------------------------
    def _check_access(self, contract: EventContract, requester: str):
        # the default policy: participants, their entities, the owning
        # entity and the generator may read
        if requester == contract.generator:
            return
        if requester in {w.identity for w in contract.participants}:
            return
        if requester in self._participating_entities(contract):
            return
        raise AccessDenied(f"{requester!r} may not read event {contract.event_id}")

    def get_ids(self, event_id: str, requester: str) -> list[str]:
        contract = self.contract(event_id)
        self._check_access(contract, requester)
        return [w.identity for w in contract.participants]

    def get_shared_data(self, event_id: str, requester: str) -> PreSharedData:
        contract = self.contract(event_id)
        self._check_access(contract, requester)
        return PreSharedData(contract.event_id, contract.lat, contract.lon, self.params_ref)

    # -- persistence and replay ---------------------------------------------------
    def save(self, path):
        with open(path, "w") as fh:
            for block in self.blocks:
                fh.write(block.to_json() + "\n")

    def serialize(self) -> str:
        return "".join(block.to_json() + "\n" for block in self.blocks)

    @classmethod
    def load(cls, path, registry: Registry, **kwargs) -> "Ledger":
        with open(path) as fh:
            blocks = [Block.from_json(line) for line in fh if line.strip()]
        return cls.from_blocks(blocks, registry, **kwargs)

    @classmethod
    def from_blocks(cls, blocks, registry: Registry, **kwargs) -> "Ledger":
        """Rebuild state from a block log, verifying integrity on the way."""
        ledger = cls(registry, _genesis=False, **kwargs)
        ledger.blocks = list(blocks)
        check = ledger.validate_chain()
        if not check.valid:
            raise LedgerError(f"chain invalid at block {check.bad_index}")
        if blocks:
            ledger.params_ref = blocks[0].payload.body.get("params_ref", "")
        for block in blocks:
            ledger._apply(block.payload)
        return ledger

    def transaction_log(self):
        """The replayable append log (payload, votes, timestamp) per block."""
        return [(b.payload, b.votes, b.timestamp) for b in self.blocks]

    @classmethod
    def replay(cls, log, registry: Registry, **kwargs) -> "Ledger":
        """Re-run an append log; must reproduce byte-identical blocks."""
        ledger = cls(registry, _genesis=False, **kwargs)
        for tx, votes, timestamp in log:
            ledger._append(tx, votes, timestamp)
            ledger._apply(tx)
        return ledger
