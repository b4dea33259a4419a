import json
import re

import pytest

from crisischain import cli

TENERIFE = ["--lat", "28.468", "--lon", "-16.254"]


@pytest.fixture(autouse=True)
def fixed_clock(monkeypatch):
    monkeypatch.setenv("CRISISCHAIN_CLOCK_START", "1700000000")


@pytest.fixture
def data_dir(tmp_path):
    return tmp_path / "data"


def run(data_dir, *argv, seed=11):
    return cli.main(["--data-dir", str(data_dir), "--seed", str(seed), *map(str, argv)])


def run_json(data_dir, capsys, *argv, seed=11):
    capsys.readouterr()  # drop output from earlier setup commands
    code = cli.main(["--data-dir", str(data_dir), "--seed", str(seed), "--json", *map(str, argv)])
    return code, json.loads(capsys.readouterr().out)


def init_toy(data_dir):
    assert run(data_dir, "pkg", "init", "--engine", "toy") == 0


def create_event(data_dir, capsys, **over):
    code, data = run_json(
        data_dir, capsys, "event", "create", "--generator", "alice",
        "--kind", over.get("kind", "fire"), "--risk", over.get("risk", 3),
        "--lat", over.get("lat", 28.468), "--lon", over.get("lon", -16.254),
    )
    assert code == 0
    return data["event_id"]


class TestPkg:
    def test_init_twice_refused(self, data_dir, capsys):
        init_toy(data_dir)
        assert run(data_dir, "pkg", "init", "--engine", "toy") == cli.EXIT_ERROR
        assert run(data_dir, "pkg", "init", "--engine", "toy", "--force") == 0

    def test_extract_reports_sanity(self, data_dir, capsys):
        init_toy(data_dir)
        code, data = run_json(data_dir, capsys, "pkg", "extract", "alice")
        assert code == 0 and data["sanity"] == "ok"

    def test_extract_empty_id_usage_error(self, data_dir):
        init_toy(data_dir)
        assert run(data_dir, "pkg", "extract", "") == cli.EXIT_USAGE

    def test_uninitialized_dir(self, data_dir):
        assert run(data_dir, "chain", "validate") == cli.EXIT_ERROR

    def test_toy_engine_refuses_production_data_flag(self, data_dir):
        init_toy(data_dir)
        code = cli.main(["--data-dir", str(data_dir), "--production-data",
                         "chain", "validate"])
        assert code == cli.EXIT_POLICY


class TestEvents:
    def test_create_ratify_show(self, data_dir, capsys):
        init_toy(data_dir)
        eid = create_event(data_dir, capsys)
        assert run(data_dir, "event", "ratify", eid, "--ratifier", "bob", *TENERIFE) == 0
        code, data = run_json(data_dir, capsys, "event", "show", eid)
        assert data["state"] == "Verified"

    def test_ratify_too_far_exit_code(self, data_dir, capsys):
        init_toy(data_dir)
        eid = create_event(data_dir, capsys)
        code = run(data_dir, "event", "ratify", eid, "--ratifier", "bob",
                   "--lat", "29.5", "--lon", "-16.254")
        assert code == cli.EXIT_CONFLICT

    def test_assign_three_workers(self, data_dir, capsys):
        init_toy(data_dir)
        eid = create_event(data_dir, capsys)
        code, data = run_json(
            data_dir, capsys, "event", "assign", eid, "--actor", "alice",
            "--worker", "medic-1:org-a", "--worker", "medic-2:org-a",
            "--worker", "medic-3:org-b",
        )
        assert code == 0 and data["num_participants"] == 3

    def test_unauthorized_kill_exit_code(self, data_dir, capsys):
        init_toy(data_dir)
        eid = create_event(data_dir, capsys)
        assert run(data_dir, "event", "kill", eid, "--actor", "carol") == cli.EXIT_POLICY

    def test_duplicate_create_exit_code(self, data_dir, capsys):
        init_toy(data_dir)
        create_event(data_dir, capsys)
        code = run(data_dir, "event", "create", "--generator", "carol",
                   "--kind", "fire", "--lat", "28.470", "--lon", "-16.254")
        assert code == cli.EXIT_CONFLICT

    def test_list_filters_by_state(self, data_dir, capsys):
        init_toy(data_dir)
        eid = create_event(data_dir, capsys)
        create_event(data_dir, capsys, kind="flooding", lat=40.0, lon=3.0)
        run(data_dir, "event", "ratify", eid, "--ratifier", "bob", *TENERIFE)
        code, data = run_json(data_dir, capsys, "event", "list", "--state", "Verified")
        assert [e["event_id"] for e in data["events"]] == [eid]


class TestKeysAndChat:
    def _ready_event(self, data_dir, capsys):
        init_toy(data_dir)
        eid = create_event(data_dir, capsys)
        run(data_dir, "event", "assign", eid, "--actor", "alice",
            "--worker", "medic-1:org-a", "--worker", "medic-2:org-a")
        for who in ("alice", "medic-1", "medic-2"):
            assert run(data_dir, "keys", "issue", eid, "--id", who) == 0
        capsys.readouterr()
        return eid

    def test_issue_requires_assignment(self, data_dir, capsys):
        init_toy(data_dir)
        eid = create_event(data_dir, capsys)
        assert run(data_dir, "keys", "issue", eid, "--id", "dave") == cli.EXIT_POLICY

    def test_p2p_roundtrip_prints_text(self, data_dir, capsys):
        eid = self._ready_event(data_dir, capsys)
        assert run(data_dir, "chat", "p2p", eid, "--from", "alice",
                   "--to", "medic-1", "--text", "water levels rising") == 0
        capsys.readouterr()
        assert run(data_dir, "chat", "inbox", eid, "--id", "medic-1") == 0
        out = capsys.readouterr().out
        assert "water levels rising" in out
        assert "[p2p] alice" in out

    def test_p2p_not_spooled_to_third_party(self, data_dir, capsys):
        eid = self._ready_event(data_dir, capsys)
        run(data_dir, "chat", "p2p", eid, "--from", "alice",
            "--to", "medic-1", "--text", "private")
        capsys.readouterr()
        assert run(data_dir, "chat", "inbox", eid, "--id", "medic-2") == 0
        assert "private" not in capsys.readouterr().out

    def test_broadcast_reaches_all_contexts(self, data_dir, capsys):
        eid = self._ready_event(data_dir, capsys)
        assert run(data_dir, "chat", "broadcast", eid, "--from", "alice",
                   "--text", "evacuate sector 2") == 0
        for who in ("medic-1", "medic-2"):
            capsys.readouterr()
            assert run(data_dir, "chat", "inbox", eid, "--id", who) == 0
            assert "evacuate sector 2" in capsys.readouterr().out

    def test_inbox_cursor_consumes(self, data_dir, capsys):
        eid = self._ready_event(data_dir, capsys)
        run(data_dir, "chat", "p2p", eid, "--from", "alice", "--to", "medic-1",
            "--text", "once only")
        run(data_dir, "chat", "inbox", eid, "--id", "medic-1")
        capsys.readouterr()
        run(data_dir, "chat", "inbox", eid, "--id", "medic-1")
        out = capsys.readouterr().out
        assert "once only" not in out and "inbox empty" in out

    def test_chat_without_keys(self, data_dir, capsys):
        init_toy(data_dir)
        eid = create_event(data_dir, capsys)
        code = run(data_dir, "chat", "p2p", eid, "--from", "alice",
                   "--to", "bob", "--text", "hi")
        assert code == cli.EXIT_ERROR

    def test_tampered_spool_frame_rejected(self, data_dir, capsys):
        eid = self._ready_event(data_dir, capsys)
        run(data_dir, "chat", "p2p", eid, "--from", "alice", "--to", "medic-1",
            "--text", "authentic")
        spool = data_dir / "spool" / "medic-1.jsonl"
        entry = json.loads(spool.read_text())
        frame = bytearray(bytes.fromhex(entry["frame"]))
        frame[-1] ^= 0x01
        entry["frame"] = frame.hex()
        spool.write_text(json.dumps(entry) + "\n")
        capsys.readouterr()
        assert run(data_dir, "chat", "inbox", eid, "--id", "medic-1") == cli.EXIT_REJECT
        out = capsys.readouterr().out
        assert "authentic" not in out
        assert "rejected" in out


class TestChain:
    def test_validate_detects_manual_edit(self, data_dir, capsys):
        init_toy(data_dir)
        create_event(data_dir, capsys)
        chain_file = data_dir / "chain.jsonl"
        lines = chain_file.read_text().splitlines()
        lines[1] = lines[1].replace('"risk_level":3', '"risk_level":5')
        chain_file.write_text("\n".join(lines) + "\n")
        code = run(data_dir, "chain", "validate")
        assert code != 0

    def test_chain_show_lists_blocks(self, data_dir, capsys):
        init_toy(data_dir)
        create_event(data_dir, capsys)
        capsys.readouterr()
        assert run(data_dir, "chain", "show") == 0
        out = capsys.readouterr().out
        assert "Genesis" in out and "Create" in out


class TestSim:
    def test_hand_countable_fixture(self, data_dir, capsys):
        # tiny area keeps two nodes always in range: 6 beacon instants each
        code, data = run_json(
            data_dir, capsys, "sim", "run", "--nodes", 2, "--area-km2", "0.001",
            "--range-m", 60, "--duration-s", 60, "--step-s", 10,
            "--beacon-period-s", 10, "--speed-min", 0, "--speed-max", 0,
            "--runs", 1,
        )
        assert code == 0
        assert data["communications_reached"] == 12.0
        assert data["isolated_nodes"] == 0.0

    def test_report_and_out_file(self, data_dir, tmp_path, capsys):
        out = tmp_path / "metrics.json"
        code = run(data_dir, "sim", "run", "--nodes", 20, "--duration-s", 300,
                   "--beacon-period-s", 100, "--runs", 2, "--out", out)
        assert code == 0
        report = capsys.readouterr().out
        assert "Communications reached" in report
        saved = json.loads(out.read_text())
        assert len(saved["per_run"]) == 2


class TestDeterminism:
    def test_identical_seeded_runs_build_identical_chains(self, tmp_path, capsys):
        chains = []
        for name in ("a", "b"):
            d = tmp_path / name
            init_toy(d)
            eid = create_event(d, capsys)
            run(d, "event", "ratify", eid, "--ratifier", "bob", *TENERIFE)
            run(d, "event", "assign", eid, "--actor", "alice", "--worker", "m:org-a")
            chains.append((d / "chain.jsonl").read_text())
        assert chains[0] == chains[1]

    def test_cli_is_a_pure_wrapper_over_the_ledger(self, data_dir, capsys):
        """The same scenario through the CLI and through direct module
        calls produces the same chain, transaction for transaction."""

        import random

        from crisischain.ledger import Block, Ledger, Registry, Worker

        init_toy(data_dir)
        eid = create_event(data_dir, capsys)
        run(data_dir, "event", "ratify", eid, "--ratifier", "bob", *TENERIFE)
        run(data_dir, "event", "assign", eid, "--actor", "alice", "--worker", "m-1:org-a")
        run(data_dir, "event", "state", eid, "--actor", "alice",
            "--risk", "5", "--state", "Verified")
        run(data_dir, "event", "kill", eid, "--actor", "org-a")
        cli_blocks = [
            Block.from_json(line)
            for line in (data_dir / "chain.jsonl").read_text().splitlines()
        ]

        genesis_body = cli_blocks[0].payload.body
        direct = Ledger(
            Registry(tuple(genesis_body["entities"]), genesis_body["staff"],
                     {v: "00" * 32 for v in genesis_body["validators"]}),
            params_ref=genesis_body["params_ref"],
            # each CLI invocation restarts the pinned clock, so every CLI
            # block carries the start timestamp
            clock=lambda: 1_700_000_000,
            rng=random.Random(11),
        )
        c = direct.create_event("alice", "org-a", (28.468, -16.254), "fire", 3)
        direct.ratify(c.event_id, "bob", (28.468, -16.254))
        direct.update_participants(c.event_id, [Worker("org-a", "addr-m-1", "m-1", "")], "alice")
        direct.update_state(c.event_id, 5, "Verified", "alice")
        direct.kill_event(c.event_id, "org-a")

        # identical op/actor/body sequence (votes differ only by validator keys)
        assert [b.payload for b in cli_blocks[1:]] == [b.payload for b in direct.blocks[1:]]
        assert [b.timestamp for b in cli_blocks] == [b.timestamp for b in direct.blocks]
