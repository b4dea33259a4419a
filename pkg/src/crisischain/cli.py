"""Command-line front end: key server lifecycle, events, chat, chain, sim.

State lives in a data directory (default ./crisis-data, overridable with
--data-dir or CRISISCHAIN_DATA): public parameters, the master secret,
validator keys, the block chain, issued event keys and the chat spool.

The chat commands run several local node contexts in one process over the
simulated radios; sent frames are spooled per recipient so a later inbox
invocation can pick them up.  Everything is scriptable: distinct failure
classes map to distinct exit codes.

Deterministic runs: pass --seed for all randomness, and set
CRISISCHAIN_CLOCK_START=<epoch seconds> to replace wall-clock timestamps
with a counter, which pins block hashes byte-for-byte.
"""

from __future__ import annotations

import argparse
import base64
import json
import os
import random
import sys
import time
from pathlib import Path

from . import bilinear, comms, ibsc, keyagree, netsim
from .bilinear import DecodeError
from .ibsc import SigncryptionReject
from .ledger import (
    AccessDenied,
    DuplicateEvent,
    Ledger,
    LedgerError,
    QuorumNotReached,
    Registry,
    Unauthorized,
    Worker,
)
from .pairing import ss512_engine

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_REJECT = 3
EXIT_POLICY = 4
EXIT_QUORUM = 5
EXIT_CONFLICT = 6

DEFAULT_STAFF = {"alice": "org-a", "bob": "org-a", "carol": "org-b", "dave": "org-b"}


class CliError(Exception):
    def __init__(self, message, code=EXIT_ERROR):
        super().__init__(message)
        self.code = code


def _clock():
    start = os.environ.get("CRISISCHAIN_CLOCK_START")
    if start is None:
        return lambda: int(time.time())
    counter = [int(start) - 1]

    def tick():
        counter[0] += 1
        return counter[0]

    return tick


class Workspace:
    """File layout and lazy loading for one data directory."""

    def __init__(self, data_dir: Path, seed=None, production_data=False):
        self.dir = Path(data_dir)
        self.rng = random.Random(seed) if seed is not None else random.SystemRandom()
        self.production_data = production_data
        self.clock = _clock()
        self._params = None
        self._master = None
        self._ledger = None

    # -- paths ------------------------------------------------------------
    @property
    def params_path(self):
        return self.dir / "params.json"

    @property
    def msk_path(self):
        return self.dir / "msk.json"

    @property
    def validators_path(self):
        return self.dir / "validators.json"

    @property
    def chain_path(self):
        return self.dir / "chain.jsonl"

    def context_path(self, actor: str, event_id: str):
        return self.dir / "contexts" / f"{actor}--{event_id}.json"

    def spool_path(self, actor: str):
        return self.dir / "spool" / f"{actor}.jsonl"

    def cursor_path(self, actor: str):
        return self.dir / "cursors" / f"{actor}.json"

    # -- init -----------------------------------------------------------------
    def init(self, engine_name: str, staff: dict, entities, n_validators: int, force: bool):
        if self.params_path.exists() and not force:
            raise CliError(
                f"{self.dir} is already initialized (use --force to overwrite)", EXIT_ERROR
            )
        self.dir.mkdir(parents=True, exist_ok=True)
        for sub in ("contexts", "spool", "cursors"):
            (self.dir / sub).mkdir(exist_ok=True)

        engine = self._engine_by_name(engine_name)
        params, master = ibsc.setup(engine, self.rng)
        validators = {
            f"v{i}": self.rng.getrandbits(256).to_bytes(32, "big").hex()
            for i in range(n_validators)
        }
        registry = Registry(tuple(entities), staff, validators)
        ledger = Ledger(
            registry, params_ref=params.fingerprint(), clock=self.clock, rng=self.rng
        )

        self.params_path.write_text(json.dumps({
            "engine": engine_name,
            "P": engine.encode_elem(params.P).hex(),
            "mpk": engine.encode_elem(params.mpk).hex(),
            "fingerprint": params.fingerprint(),
        }, indent=2))
        self.msk_path.write_text(json.dumps({"msk": hex(master.msk)}))
        self.msk_path.chmod(0o600)
        self.validators_path.write_text(json.dumps(validators))
        self.validators_path.chmod(0o600)
        ledger.save(self.chain_path)
        self._params, self._master, self._ledger = params, master, ledger
        return params

    @staticmethod
    def _engine_by_name(name: str):
        if name == "toy":
            return bilinear.toy_engine()
        if name == "production":
            return ss512_engine()
        raise CliError(f"unknown engine {name!r}", EXIT_USAGE)

    # -- loading ------------------------------------------------------------------
    def params(self) -> ibsc.SystemParams:
        if self._params is None:
            if not self.params_path.exists():
                raise CliError(f"{self.dir} is not initialized (run: pkg init)", EXIT_ERROR)
            data = json.loads(self.params_path.read_text())
            if data["engine"] == "toy" and self.production_data:
                raise CliError(
                    "refusing --production-data with the insecure toy engine", EXIT_POLICY
                )
            engine = self._engine_by_name(data["engine"])
            p = engine.decode_elem(bytes.fromhex(data["P"]))
            mpk = engine.decode_elem(bytes.fromhex(data["mpk"]))
            self._params = ibsc.SystemParams(engine, p, mpk)
        return self._params

    def master(self) -> ibsc.MasterKey:
        if self._master is None:
            data = json.loads(self.msk_path.read_text())
            self._master = ibsc.MasterKey(int(data["msk"], 16))
        return self._master

    def ledger(self) -> Ledger:
        if self._ledger is None:
            params = self.params()
            genesis_body = json.loads(self.chain_path.read_text().splitlines()[0])["payload"]["body"]
            validators = json.loads(self.validators_path.read_text())
            registry = Registry(
                tuple(genesis_body["entities"]), genesis_body["staff"], validators
            )
            self._ledger = Ledger.load(
                self.chain_path, registry, clock=self.clock, rng=self.rng
            )
        return self._ledger

    def save_chain(self):
        self.ledger().save(self.chain_path)

    # -- event keys and chat state ----------------------------------------------------
    def store_event_keys(self, keys: ibsc.EventKeys):
        path = self.context_path(keys.id.decode(), keys.ctx.event_id.decode())
        path.write_text(json.dumps({
            "keys": ibsc.encode_event_keys(self.params(), keys).hex()
        }))
        path.chmod(0o600)

    def load_event_keys(self, actor: str, event_id: str) -> ibsc.EventKeys:
        path = self.context_path(actor, event_id)
        if not path.exists():
            raise CliError(
                f"no issued keys for {actor!r} on event {event_id} (run: keys issue)",
                EXIT_ERROR,
            )
        data = json.loads(path.read_text())
        return ibsc.decode_event_keys(self.params(), bytes.fromhex(data["keys"]))

    def contexts_for_event(self, event_id: str) -> list[str]:
        folder = self.dir / "contexts"
        suffix = f"--{event_id}.json"
        return sorted(
            p.name[: -len(suffix)] for p in folder.glob(f"*{suffix}")
        )

    def spool_frames(self, actor: str, event_id: str, frames):
        with open(self.spool_path(actor), "a") as fh:
            for frame in frames:
                fh.write(json.dumps({"event": event_id, "frame": frame.hex()}) + "\n")

    def read_spool(self, actor: str, event_id: str, since: int):
        path = self.spool_path(actor)
        if not path.exists():
            return [], 0
        entries = [json.loads(line) for line in path.read_text().splitlines() if line.strip()]
        matching = [e for e in entries if e["event"] == event_id]
        return [bytes.fromhex(e["frame"]) for e in matching[since:]], len(matching)

    def cursor(self, actor: str, event_id: str) -> int:
        path = self.cursor_path(actor)
        if not path.exists():
            return 0
        return json.loads(path.read_text()).get(event_id, 0)

    def set_cursor(self, actor: str, event_id: str, value: int):
        path = self.cursor_path(actor)
        data = json.loads(path.read_text()) if path.exists() else {}
        data[event_id] = value
        path.write_text(json.dumps(data))


def _emit(args, payload: dict, human: str):
    print(json.dumps(payload, indent=2) if args.json else human)


# -- command handlers ------------------------------------------------------------------

def cmd_pkg_init(ws: Workspace, args) -> int:
    staff = dict(DEFAULT_STAFF)
    entities = {"org-a", "org-b"}
    if args.staff:
        staff = {}
        entities = set(args.entity or [])
        for pair in args.staff:
            ident, _, entity = pair.partition(":")
            if not entity:
                raise CliError(f"--staff needs id:entity, got {pair!r}", EXIT_USAGE)
            staff[ident] = entity
            entities.add(entity)
    elif args.entity:
        entities.update(args.entity)
    params = ws.init(args.engine, staff, sorted(entities), args.validators, args.force)
    _emit(args, {
        "engine": params.engine.name,
        "fingerprint": params.fingerprint(),
        "staff": staff,
        "validators": args.validators,
        "data_dir": str(ws.dir),
    }, f"initialized {ws.dir} with engine {params.engine.name} "
       f"(fingerprint {params.fingerprint()})")
    return EXIT_OK


def cmd_pkg_extract(ws: Workspace, args) -> int:
    if not args.id:
        raise CliError("identity must be nonempty", EXIT_USAGE)
    params = ws.params()
    keys = ibsc.extract(params, ws.master(), args.id)
    ok = ibsc.verify_key_pair(params, keys.Q, keys.S)
    if not ok:
        raise CliError("extracted keys failed the pairing sanity check", EXIT_ERROR)
    _emit(args, {
        "id": args.id,
        "Q": params.engine.encode_elem(keys.Q).hex(),
        "sanity": "ok",
    }, f"extracted keys for {args.id!r}: pairing sanity check ok")
    return EXIT_OK


def cmd_event_create(ws: Workspace, args) -> int:
    led = ws.ledger()
    contract = led.create_event(
        args.generator,
        args.entity or led.registry.entity_of(args.generator),
        (args.lat, args.lon),
        args.kind,
        args.risk,
        args.policy,
    )
    ws.save_chain()
    _emit(args, {"event_id": contract.event_id, "state": contract.state,
                 "block_hash": led.blocks[-1].hash},
          f"created {contract.event_id} ({contract.kind}, risk {contract.risk_level}) "
          f"state={contract.state}")
    return EXIT_OK


def cmd_event_ratify(ws: Workspace, args) -> int:
    led = ws.ledger()
    state = led.ratify(args.event, args.ratifier, (args.lat, args.lon))
    ws.save_chain()
    _emit(args, {"event_id": args.event, "state": state},
          f"{args.event} is now {state}")
    return EXIT_OK


def cmd_event_abort(ws: Workspace, args) -> int:
    led = ws.ledger()
    state = led.abort_event(args.event, args.actor)
    ws.save_chain()
    _emit(args, {"event_id": args.event, "state": state}, f"{args.event} aborted")
    return EXIT_OK


def cmd_event_assign(ws: Workspace, args) -> int:
    led = ws.ledger()
    workers = []
    for spec in args.worker:
        parts = spec.split(":")
        if len(parts) == 2:
            identity, entity = parts
            user = f"addr-{identity}"
        elif len(parts) == 3:
            identity, entity, user = parts
        else:
            raise CliError(f"--worker needs identity:entity[:user], got {spec!r}", EXIT_USAGE)
        workers.append(Worker(entity, user, identity, args.event))
    contract = led.update_participants(args.event, workers, args.actor)
    ws.save_chain()
    _emit(args, {"event_id": args.event, "num_participants": contract.num_participants},
          f"{args.event} now has {contract.num_participants} participants")
    return EXIT_OK


def cmd_event_state(ws: Workspace, args) -> int:
    led = ws.ledger()
    contract = led.update_state(args.event, args.risk, args.state, args.actor)
    ws.save_chain()
    _emit(args, {"event_id": args.event, "state": contract.state,
                 "risk_level": contract.risk_level},
          f"{args.event}: state={contract.state} risk={contract.risk_level}")
    return EXIT_OK


def cmd_event_kill(ws: Workspace, args) -> int:
    led = ws.ledger()
    contract = led.kill_event(args.event, args.actor)
    ws.save_chain()
    _emit(args, {"event_id": args.event, "state": contract.state}, f"{args.event} killed")
    return EXIT_OK


def cmd_event_show(ws: Workspace, args) -> int:
    led = ws.ledger()
    contract = led.contract(args.event)
    refs = [b.index for b in led.blocks if b.payload.body.get("event_id") == args.event]
    data = {**contract.to_dict(), "blocks": refs}
    _emit(args, data,
          f"{contract.event_id}: {contract.kind} risk={contract.risk_level} "
          f"state={contract.state} participants={contract.num_participants} "
          f"@({contract.lat:.6f},{contract.lon:.6f}) blocks={refs}")
    return EXIT_OK


def cmd_event_list(ws: Workspace, args) -> int:
    led = ws.ledger()
    contracts = [
        c for c in led.contracts.values() if args.state is None or c.state == args.state
    ]
    if args.json:
        print(json.dumps({"events": [c.to_dict() for c in contracts]}, indent=2))
    else:
        for c in contracts:
            print(f"{c.event_id}  {c.kind:<10} risk={c.risk_level} {c.state:<9} "
                  f"participants={c.num_participants}")
        if not contracts:
            print("no events")
    return EXIT_OK


def cmd_keys_issue(ws: Workspace, args) -> int:
    """Issue event keys to a staff member over the full sealed channel."""
    params = ws.params()
    led = ws.ledger()
    contract = led.contract(args.event)
    allowed = {contract.generator} | {w.identity for w in contract.participants}
    if args.id not in allowed:
        raise CliError(f"{args.id!r} is not assigned to {args.event}", EXIT_POLICY)
    ctx = ibsc.EventContext(args.event.encode(), contract.lat, contract.lon)

    dh = keyagree.DhParams(params.engine)
    staff_pair = keyagree.dh_keygen(dh, ws.rng)
    server_pair = keyagree.dh_keygen(dh, ws.rng)
    staff_key = keyagree.dh_shared(dh, staff_pair, server_pair.pk)
    server_key = keyagree.dh_shared(dh, server_pair, staff_pair.pk)
    if keyagree.confirmation_tag(staff_key) != keyagree.confirmation_tag(server_key):
        raise CliError("session confirmation failed", EXIT_ERROR)

    keys = ibsc.derive_event_keys(params, ws.master(), args.id, ctx)
    nonce = ws.rng.getrandbits(96).to_bytes(12, "big")
    sealed = keyagree.seal(server_key, ibsc.encode_event_keys(params, keys), nonce)
    opened = keyagree.open_sealed(staff_key, sealed)
    received = ibsc.decode_event_keys(params, opened)
    if not ibsc.verify_key_pair(params, received.Q, received.S):
        raise CliError("delivered keys failed the pairing sanity check", EXIT_ERROR)
    ws.store_event_keys(received)
    _emit(args, {"id": args.id, "event_id": args.event, "sanity": "ok",
                 "sealed_bytes": len(keyagree.encode_sealed(sealed))},
          f"issued event keys to {args.id!r} for {args.event} "
          f"(sealed channel, sanity check ok)")
    return EXIT_OK


def _chat_network(ws: Workspace, event_id: str):
    """All locally issued contexts for the event, on one radio environment."""
    params = ws.params()
    led = ws.ledger()
    contract = led.contract(event_id)
    env = comms.RadioEnvironment(clock=ws.clock)
    roster = [contract.generator] + [w.identity for w in contract.participants]
    nodes = {}
    for actor in ws.contexts_for_event(event_id):
        keys = ws.load_event_keys(actor, event_id)
        nodes[actor] = comms.NodeContext(params, keys, env, position=(0.0, 0.0), rng=ws.rng)
        nodes[actor].set_roster(roster)
    comms.exchange_beacons(list(nodes.values()))
    return env, nodes


def _spool_deliveries(ws: Workspace, env, event_id: str, exclude=()):
    for node_id, queue in env.queues.items():
        actor = node_id.decode()
        if actor in exclude or not queue:
            continue
        ws.spool_frames(actor, event_id, [frame for _, frame in queue])


def cmd_chat_p2p(ws: Workspace, args) -> int:
    env, nodes = _chat_network(ws, args.event)
    sender = nodes.get(getattr(args, "from"))
    if sender is None:
        raise CliError(f"no issued keys for {getattr(args, 'from')!r}", EXIT_ERROR)
    receipt = comms.send_p2p(sender, args.to.encode(), args.text.encode(), args.kind)
    _spool_deliveries(ws, env, args.event)
    delivered = [[p.decode(), ch] for p, ch in receipt.delivered]
    _emit(args, {"delivered": delivered,
                 "undeliverable": [[p.decode(), r] for p, r in receipt.undeliverable]},
          f"delivered to {delivered[0][0]} via {delivered[0][1]}" if delivered
          else "undeliverable")
    return EXIT_OK if delivered else EXIT_CONFLICT


def cmd_chat_broadcast(ws: Workspace, args) -> int:
    env, nodes = _chat_network(ws, args.event)
    sender = nodes.get(getattr(args, "from"))
    if sender is None:
        raise CliError(f"no issued keys for {getattr(args, 'from')!r}", EXIT_ERROR)
    receipt = comms.send_broadcast(sender, args.text.encode(), args.kind)
    _spool_deliveries(ws, env, args.event)
    _emit(args, {"delivered": [[p.decode(), ch] for p, ch in receipt.delivered],
                 "undeliverable": [[p.decode(), r] for p, r in receipt.undeliverable]},
          f"broadcast delivered to {len(receipt.delivered)} peers"
          + (f", {len(receipt.undeliverable)} unreachable" if receipt.undeliverable else ""))
    return EXIT_OK


def cmd_chat_inbox(ws: Workspace, args) -> int:
    params = ws.params()
    keys = ws.load_event_keys(args.id, args.event)
    env = comms.RadioEnvironment(clock=ws.clock)
    node = comms.NodeContext(params, keys, env, rng=ws.rng)
    since = 0 if args.all else ws.cursor(args.id, args.event)
    frames, total = ws.read_spool(args.id, args.event, since)
    messages = []
    for frame in frames:
        try:
            messages.append(comms.receive(node, frame))
        except SigncryptionReject:
            node.rejected += 1
        except DecodeError:
            node.malformed += 1
    ws.set_cursor(args.id, args.event, total)
    if args.json:
        print(json.dumps({
            "messages": [
                {"sender": m.sender_id.decode(), "mode": m.mode, "kind": m.payload_kind,
                 "body": base64.b64encode(m.body).decode(),
                 "text": m.body.decode() if m.payload_kind == "text" else None}
                for m in messages
            ],
            "rejected": node.rejected,
            "malformed": node.malformed,
        }, indent=2))
    else:
        for m in messages:
            body = m.body.decode() if m.payload_kind == "text" else f"<{m.payload_kind}: {len(m.body)} bytes>"
            print(f"[{m.mode}] {m.sender_id.decode()}: {body}")
        if node.rejected or node.malformed:
            print(f"(dropped {node.rejected} rejected, {node.malformed} malformed)")
        if not messages and not node.rejected and not node.malformed:
            print("inbox empty")
    if node.rejected or node.malformed:
        return EXIT_REJECT
    return EXIT_OK


def cmd_chain_show(ws: Workspace, args) -> int:
    led = ws.ledger()
    blocks = led.blocks[-args.limit:] if args.limit else led.blocks
    if args.json:
        print("[" + ",".join(b.to_json() for b in blocks) + "]")
    else:
        for b in blocks:
            print(f"#{b.index:<4} {b.payload.op:<19} by {b.payload.actor:<10} "
                  f"hash={b.hash[:16]}.. prev={b.prev_hash[:16]}.. votes={len(b.votes)}")
    return EXIT_OK


def cmd_chain_validate(ws: Workspace, args) -> int:
    result = ws.ledger().validate_chain()
    _emit(args, {"valid": result.valid, "bad_index": result.bad_index},
          "chain valid" if result.valid else f"chain INVALID at block {result.bad_index}")
    return EXIT_OK if result.valid else EXIT_ERROR


def cmd_sim_run(ws: Workspace, args) -> int:
    config = netsim.SimConfig(
        node_count=args.nodes,
        area_km2=args.area_km2,
        radio_range_m=args.range_m,
        duration_s=args.duration_s,
        step_s=args.step_s,
        speed_range_mps=(args.speed_min, args.speed_max),
        beacon_period_s=args.beacon_period_s,
        runs=args.runs,
        seed=args.seed if args.seed is not None else 0,
    )
    metrics = netsim.sim_campaign(config)
    if args.out:
        Path(args.out).write_text(metrics.to_json())
    if args.trace_csv:
        sim = netsim.sim_new(config)
        netsim.sim_run(sim, record_trace=True)
        netsim.write_trace_csv(sim, args.trace_csv)
    if args.json:
        print(metrics.to_json())
    else:
        print(netsim.format_report(metrics))
    return EXIT_OK


def cmd_gateway_serve(ws: Workspace, args) -> int:
    import uvicorn

    from .gateway import Gateway, create_app

    gw = Gateway(ws.params(), ws.master(), ws.ledger(), rng=ws.rng, clock=ws.clock)
    app = create_app(gw)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crisischain",
        description="decentralized emergency-coordination stack",
    )
    parser.add_argument("--data-dir", default=os.environ.get("CRISISCHAIN_DATA", "crisis-data"))
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    parser.add_argument("--seed", type=int, default=None, help="seed all randomness")
    parser.add_argument("--production-data", action="store_true",
                        help="assert this data dir holds real deployment data")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pkg", help="key server lifecycle")
    psub = p.add_subparsers(dest="subcommand", required=True)
    q = psub.add_parser("init")
    q.add_argument("--engine", choices=["toy", "production"], default="production")
    q.add_argument("--staff", action="append", metavar="ID:ENTITY")
    q.add_argument("--entity", action="append", metavar="NAME")
    q.add_argument("--validators", type=int, default=5)
    q.add_argument("--force", action="store_true")
    q.set_defaults(func=cmd_pkg_init)
    q = psub.add_parser("extract")
    q.add_argument("id")
    q.set_defaults(func=cmd_pkg_extract)

    p = sub.add_parser("event", help="event contract operations")
    psub = p.add_subparsers(dest="subcommand", required=True)
    q = psub.add_parser("create")
    q.add_argument("--generator", required=True)
    q.add_argument("--entity")
    q.add_argument("--lat", type=float, required=True)
    q.add_argument("--lon", type=float, required=True)
    q.add_argument("--kind", required=True)
    q.add_argument("--risk", type=int, default=3)
    q.add_argument("--policy", default="participants-and-entities")
    q.set_defaults(func=cmd_event_create)
    q = psub.add_parser("ratify")
    q.add_argument("event")
    q.add_argument("--ratifier", required=True)
    q.add_argument("--lat", type=float, required=True)
    q.add_argument("--lon", type=float, required=True)
    q.set_defaults(func=cmd_event_ratify)
    q = psub.add_parser("abort")
    q.add_argument("event")
    q.add_argument("--actor", required=True)
    q.set_defaults(func=cmd_event_abort)
    q = psub.add_parser("assign")
    q.add_argument("event")
    q.add_argument("--actor", required=True)
    q.add_argument("--worker", action="append", required=True, metavar="IDENTITY:ENTITY[:USER]")
    q.set_defaults(func=cmd_event_assign)
    q = psub.add_parser("state")
    q.add_argument("event")
    q.add_argument("--actor", required=True)
    q.add_argument("--risk", type=int, required=True)
    q.add_argument("--state", required=True, choices=["Created", "Verified", "Inactive"])
    q.set_defaults(func=cmd_event_state)
    q = psub.add_parser("kill")
    q.add_argument("event")
    q.add_argument("--actor", required=True)
    q.set_defaults(func=cmd_event_kill)
    q = psub.add_parser("show")
    q.add_argument("event")
    q.set_defaults(func=cmd_event_show)
    q = psub.add_parser("list")
    q.add_argument("--state", choices=["Created", "Verified", "Inactive"])
    q.set_defaults(func=cmd_event_list)

    p = sub.add_parser("keys", help="event key issuance")
    psub = p.add_subparsers(dest="subcommand", required=True)
    q = psub.add_parser("issue")
    q.add_argument("event")
    q.add_argument("--id", required=True)
    q.set_defaults(func=cmd_keys_issue)

    p = sub.add_parser("chat", help="local multi-node chat demo")
    psub = p.add_subparsers(dest="subcommand", required=True)
    q = psub.add_parser("p2p")
    q.add_argument("event")
    q.add_argument("--from", required=True)
    q.add_argument("--to", required=True)
    q.add_argument("--text", required=True)
    q.add_argument("--kind", default="text", choices=["text", "image", "audio"])
    q.set_defaults(func=cmd_chat_p2p)
    q = psub.add_parser("broadcast")
    q.add_argument("event")
    q.add_argument("--from", required=True)
    q.add_argument("--text", required=True)
    q.add_argument("--kind", default="text", choices=["text", "image", "audio"])
    q.set_defaults(func=cmd_chat_broadcast)
    q = psub.add_parser("inbox")
    q.add_argument("event")
    q.add_argument("--id", required=True)
    q.add_argument("--all", action="store_true", help="ignore the stored cursor")
    q.set_defaults(func=cmd_chat_inbox)

    p = sub.add_parser("chain", help="chain inspection")
    psub = p.add_subparsers(dest="subcommand", required=True)
    q = psub.add_parser("show")
    q.add_argument("--limit", type=int)
    q.set_defaults(func=cmd_chain_show)
    q = psub.add_parser("validate")
    q.set_defaults(func=cmd_chain_validate)

    p = sub.add_parser("sim", help="opportunistic-network simulation")
    psub = p.add_subparsers(dest="subcommand", required=True)
    q = psub.add_parser("run")
    q.add_argument("--nodes", type=int, default=300)
    q.add_argument("--area-km2", type=float, default=2.0)
    q.add_argument("--range-m", type=float, default=60.0)
    q.add_argument("--duration-s", type=float, default=3700.0)
    q.add_argument("--step-s", type=float, default=10.0)
    q.add_argument("--speed-min", type=float, default=0.01)
    q.add_argument("--speed-max", type=float, default=0.04)
    q.add_argument("--beacon-period-s", type=float, default=700.0)
    q.add_argument("--runs", type=int, default=10)
    q.add_argument("--out")
    q.add_argument("--trace-csv")
    q.set_defaults(func=cmd_sim_run)

    p = sub.add_parser("gateway", help="HTTP gateway")
    psub = p.add_subparsers(dest="subcommand", required=True)
    q = psub.add_parser("serve")
    q.add_argument("--host", default="127.0.0.1")
    q.add_argument("--port", type=int, default=8787)
    q.set_defaults(func=cmd_gateway_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    ws = Workspace(Path(args.data_dir), seed=args.seed, production_data=args.production_data)
    try:
        return args.func(ws, args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (Unauthorized, AccessDenied) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_POLICY
    except QuorumNotReached as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_QUORUM
    except SigncryptionReject as exc:
        print(f"rejected: {exc}", file=sys.stderr)
        return EXIT_REJECT
    except DuplicateEvent as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFLICT
    except (LedgerError, comms.CommsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFLICT
    except (ValueError, DecodeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def entrypoint():
    sys.exit(main())
