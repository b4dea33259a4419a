"""Local HTTP gateway: event ledger, key issuance, and the chat plane.

A thin JSON surface over the ledger contract operations, plus the key
server endpoints: clients establish a Diffie-Hellman session, then pull
their event-scoped private keys as sealed blobs only they can open.

Chat runs through server-hosted node contexts, one per (session, event),
all placed at the incident location on a shared simulated radio
environment.  The inbox is cursor-polled; nothing is pushed.

Every error maps onto the error schema {code, detail} with a stable
code: unauthorized, not_found, conflict, quorum or bad_request.
"""

from __future__ import annotations

import base64
import secrets
import time

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import comms, ibsc, keyagree, ledger as ledger_mod
from .keyagree import DhParams


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode()


def _unb64(text: str) -> bytes:
    return base64.b64decode(text)


class GatewaySession:
    def __init__(self, token: str, actor_id: str, key: keyagree.SessionKey | None):
        self.token = token
        self.actor_id = actor_id
        self.key = key  # None for console-grade sessions (no key delivery)


class Gateway:
    """Server state shared by all requests: PKG, ledger, sessions, chat."""

    def __init__(self, params: ibsc.SystemParams, master: ibsc.MasterKey,
                 ledger: ledger_mod.Ledger, rng=None, clock=time.time):
        self.params = params
        self.master = master
        self.ledger = ledger
        self.rng = rng or secrets.SystemRandom()
        self.clock = clock
        self.sessions: dict[str, GatewaySession] = {}
        self.envs: dict[str, comms.RadioEnvironment] = {}
        self.contexts: dict[tuple, comms.NodeContext] = {}

    # -- sessions and key issuance ------------------------------------------
    def open_session(self, actor_id: str, client_pk_raw: bytes | None) -> dict:
        """Establish a session.

        With a client public point this is the full key-agreement path and
        later issuance returns sealed key material.  Without one (browser
        console, which holds no crypto), the session is console-grade: all
        key material stays on this host and issuance only registers the
        server-side chat context.
        """
        engine = self.params.engine
        token = "%032x" % self.rng.getrandbits(128)
        if client_pk_raw is None:
            self.sessions[token] = GatewaySession(token, actor_id, None)
            return {"server_pk": None, "token": token, "confirm": None}
        client_pk = engine.decode_elem(client_pk_raw)
        dh = DhParams(engine)
        server_pair = keyagree.dh_keygen(dh, self.rng)
        key = keyagree.dh_shared(dh, server_pair, client_pk)
        self.sessions[token] = GatewaySession(token, actor_id, key)
        return {
            "server_pk": _b64(engine.encode_elem(server_pair.pk)),
            "token": token,
            "confirm": keyagree.confirmation_tag(key).hex(),
        }

    def session(self, token: str) -> GatewaySession:
        sess = self.sessions.get(token or "")
        if sess is None:
            raise SessionRequired("no established session for this token")
        return sess

    def _event_context(self, event_id: str) -> ibsc.EventContext:
        contract = self.ledger.contract(event_id)
        return ibsc.EventContext(event_id.encode(), contract.lat, contract.lon)

    def issue_keys(self, token: str, event_id: str) -> dict:
        sess = self.session(token)
        contract = self.ledger.contract(event_id)
        allowed = {contract.generator} | {w.identity for w in contract.participants}
        if sess.actor_id not in allowed:
            raise ledger_mod.Unauthorized(
                f"{sess.actor_id!r} is not assigned to event {event_id}"
            )
        ctx = self._event_context(event_id)
        keys = ibsc.derive_event_keys(self.params, self.master, sess.actor_id, ctx)
        self._register_context(sess.actor_id, event_id, keys, contract)
        if sess.key is None:
            return {"sealed": None, "registered": True}
        nonce = self.rng.getrandbits(96).to_bytes(12, "big")
        sealed = keyagree.seal(sess.key, ibsc.encode_event_keys(self.params, keys), nonce)
        return {"sealed": _b64(keyagree.encode_sealed(sealed)), "registered": True}

    # -- chat plane ------------------------------------------------------------
    def _register_context(self, actor_id: str, event_id: str, keys: ibsc.EventKeys,
                          contract) -> comms.NodeContext:
        env = self.envs.setdefault(event_id, comms.RadioEnvironment(clock=self.clock))
        key = (actor_id, event_id)
        if key not in self.contexts:
            self.contexts[key] = comms.NodeContext(
                self.params, keys, env, position=(0.0, 0.0), rng=self.rng
            )
        self._refresh_event(event_id, contract)
        return self.contexts[key]

    def _refresh_event(self, event_id: str, contract):
        roster = [contract.generator] + [w.identity for w in contract.participants]
        nodes = [n for (a, e), n in self.contexts.items() if e == event_id]
        for node in nodes:
            node.set_roster(roster)
        comms.exchange_beacons(nodes)

    def _context(self, sess: GatewaySession, event_id: str) -> comms.NodeContext:
        node = self.contexts.get((sess.actor_id, event_id))
        if node is None:
            raise SessionRequired("keys not issued for this event")
        return node

    def _deliver_event(self, event_id: str):
        for (actor, eid), node in self.contexts.items():
            if eid == event_id:
                comms.poll(node)

    def send_p2p(self, token: str, event_id: str, to: str, body: bytes, kind: str) -> dict:
        sess = self.session(token)
        node = self._context(sess, event_id)
        receipt = comms.send_p2p(node, to.encode(), body, kind)
        self._deliver_event(event_id)
        return _receipt_dict(receipt)

    def send_broadcast(self, token: str, event_id: str, body: bytes, kind: str) -> dict:
        sess = self.session(token)
        node = self._context(sess, event_id)
        receipt = comms.send_broadcast(node, body, kind)
        self._deliver_event(event_id)
        return _receipt_dict(receipt)

    def inbox(self, token: str, event_id: str, since: int) -> dict:
        sess = self.session(token)
        node = self._context(sess, event_id)
        comms.poll(node)
        msgs = node.inbox[since:]
        return {
            "messages": [
                {
                    "sender": m.sender_id.decode(errors="replace"),
                    "mode": m.mode,
                    "kind": m.payload_kind,
                    "body": _b64(m.body),
                    "text": m.body.decode() if m.payload_kind == "text" else None,
                }
                for m in msgs
            ],
            "cursor": len(node.inbox),
            "rejected": node.rejected,
            "malformed": node.malformed,
        }


class SessionRequired(Exception):
    pass


def _receipt_dict(receipt: comms.DeliveryReceipt) -> dict:
    return {
        "delivered": [[p.decode(errors="replace"), ch] for p, ch in receipt.delivered],
        "undeliverable": [[p.decode(errors="replace"), why] for p, why in receipt.undeliverable],
    }


def _contract_dict(contract, block_hash=None):
    out = {"contract": contract.to_dict()}
    if block_hash is not None:
        out["block_hash"] = block_hash
    return out


# -- request bodies ---------------------------------------------------------------

class CreateEventBody(BaseModel):
    actor: str
    entity: str
    lat: float
    lon: float
    kind: str
    risk_level: int
    policy: str = ledger_mod.DEFAULT_POLICY


class RatifyBody(BaseModel):
    actor: str
    lat: float
    lon: float


class WorkerBody(BaseModel):
    entity: str
    user: str
    identity: str


class ParticipantsBody(BaseModel):
    actor: str
    workers: list[WorkerBody]


class StateBody(BaseModel):
    actor: str
    risk_level: int
    state: str


class DhBody(BaseModel):
    actor_id: str
    pk: str | None = None


class IssueBody(BaseModel):
    token: str
    event_id: str


class ChatBody(BaseModel):
    token: str
    to: str | None = None
    body: str | None = None
    text: str | None = None
    payload_kind: str = "text"

    def payload(self) -> bytes:
        if self.body is not None:
            return _unb64(self.body)
        if self.text is not None:
            return self.text.encode()
        raise ValueError("one of body or text is required")


_ERROR_CODES = [
    ((SessionRequired,), 401, "unauthorized"),
    ((ledger_mod.Unauthorized, ledger_mod.AccessDenied), 403, "unauthorized"),
    ((ledger_mod.UnknownEvent,), 404, "not_found"),
    ((ledger_mod.QuorumNotReached,), 409, "quorum"),
    (
        (
            ledger_mod.TooFar,
            ledger_mod.SelfRatification,
            ledger_mod.DuplicateEvent,
            ledger_mod.InvalidTransition,
            ledger_mod.DuplicateWorker,
            ledger_mod.DuplicateVote,
            comms.CommsError,
            ibsc.SigncryptionReject,
        ),
        409,
        "conflict",
    ),
    ((ValueError, keyagree.SealRejected), 400, "bad_request"),
]


def create_app(gw: Gateway) -> FastAPI:
    app = FastAPI(title="crisischain gateway", version="0.1.0")

    for exc_types, status, code in _ERROR_CODES:
        for exc_type in exc_types:
            def handler(request: Request, exc, status=status, code=code):
                detail = str(exc)
                extra = {}
                if isinstance(exc, ledger_mod.DuplicateEvent):
                    extra["existing_event_id"] = exc.existing_event_id
                return JSONResponse(
                    status_code=status, content={"code": code, "detail": detail, **extra}
                )
            app.add_exception_handler(exc_type, handler)

    # -- event contract surface -------------------------------------------
    @app.post("/events", status_code=201)
    def create_event(body: CreateEventBody):
        contract = gw.ledger.create_event(
            body.actor, body.entity, (body.lat, body.lon), body.kind,
            body.risk_level, body.policy,
        )
        return _contract_dict(contract, gw.ledger.blocks[-1].hash)

    @app.post("/events/{event_id}/ratify")
    def ratify(event_id: str, body: RatifyBody):
        state = gw.ledger.ratify(event_id, body.actor, (body.lat, body.lon))
        return {"state": state, "block_hash": gw.ledger.blocks[-1].hash}

    @app.post("/events/{event_id}/participants")
    def participants(event_id: str, body: ParticipantsBody):
        workers = [
            ledger_mod.Worker(w.entity, w.user, w.identity, event_id)
            for w in body.workers
        ]
        contract = gw.ledger.update_participants(event_id, workers, body.actor)
        if event_id in gw.envs:
            gw._refresh_event(event_id, contract)
        return _contract_dict(contract, gw.ledger.blocks[-1].hash)

    @app.post("/events/{event_id}/state")
    def update_state(event_id: str, body: StateBody):
        contract = gw.ledger.update_state(event_id, body.risk_level, body.state, body.actor)
        return _contract_dict(contract, gw.ledger.blocks[-1].hash)

    @app.delete("/events/{event_id}")
    def kill(event_id: str, actor: str):
        contract = gw.ledger.kill_event(event_id, actor)
        return _contract_dict(contract, gw.ledger.blocks[-1].hash)

    def _event_dict(contract) -> dict:
        return {
            **contract.to_dict(),
            "last_block_hash": gw.ledger.last_block_hash(contract.event_id),
        }

    @app.get("/events")
    def list_events(state: str | None = None):
        contracts = gw.ledger.contracts.values()
        if state is not None:
            contracts = [c for c in contracts if c.state == state]
        return {"events": [_event_dict(c) for c in contracts]}

    @app.get("/events/{event_id}")
    def get_event(event_id: str):
        return _event_dict(gw.ledger.contract(event_id))

    @app.get("/events/{event_id}/ids")
    def get_ids(event_id: str, requester: str):
        return {"ids": gw.ledger.get_ids(event_id, requester)}

    @app.get("/events/{event_id}/shared")
    def get_shared(event_id: str, requester: str):
        return gw.ledger.get_shared_data(event_id, requester).to_dict()

    # -- chain surface -------------------------------------------------------
    @app.get("/chain")
    def chain(limit: int | None = None):
        blocks = gw.ledger.blocks[-limit:] if limit else gw.ledger.blocks
        return {
            "blocks": [
                {
                    "index": b.index,
                    "prev_hash": b.prev_hash,
                    "payload": {"op": b.payload.op, "actor": b.payload.actor, "body": b.payload.body},
                    "timestamp": b.timestamp,
                    "votes": [list(v) for v in b.votes],
                    "hash": b.hash,
                }
                for b in blocks
            ],
            "length": len(gw.ledger.blocks),
        }

    @app.get("/chain/validate")
    def validate():
        result = gw.ledger.validate_chain()
        return {"valid": result.valid, "bad_index": result.bad_index}

    # -- key server ------------------------------------------------------------
    @app.get("/params")
    def params():
        e = gw.params.engine
        return {
            "engine": e.name,
            "q": hex(e.q),
            "element_len": e.element_len,
            "P": _b64(e.encode_elem(gw.params.P)),
            "mpk": _b64(e.encode_elem(gw.params.mpk)),
            "fingerprint": gw.params.fingerprint(),
        }

    @app.post("/keys/dh")
    def keys_dh(body: DhBody):
        return gw.open_session(body.actor_id, _unb64(body.pk) if body.pk else None)

    @app.post("/keys/issue")
    def keys_issue(body: IssueBody):
        return gw.issue_keys(body.token, body.event_id)

    # -- chat -------------------------------------------------------------------
    @app.post("/chat/{event_id}/p2p")
    def chat_p2p(event_id: str, body: ChatBody):
        if not body.to:
            raise ValueError("p2p chat requires a target id")
        return gw.send_p2p(body.token, event_id, body.to, body.payload(), body.payload_kind)

    @app.post("/chat/{event_id}/broadcast")
    def chat_broadcast(event_id: str, body: ChatBody):
        return gw.send_broadcast(body.token, event_id, body.payload(), body.payload_kind)

    @app.get("/chat/{event_id}/inbox")
    def chat_inbox(event_id: str, token: str, since: int = 0):
        return gw.inbox(token, event_id, since)

    return app
