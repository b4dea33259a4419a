// Console workflows against a real gateway process: spawn the backend,
// drive it through the same client and renderers the page uses, and
// assert the workflows the console promises.

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiError, GatewayClient } from "../src/api.js";
import { renderEventBoard } from "../src/board.js";
import { ChatStore } from "../src/chat.js";
import type { EventView } from "../src/model.js";

const PORT = 8873;
const BASE = `http://127.0.0.1:${PORT}`;
let server: ChildProcess;
const client = new GatewayClient(BASE);

async function waitForGateway(timeoutMs = 20000) {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const resp = await fetch(`${BASE}/params`);
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 250));
  }
  throw new Error("gateway did not come up");
}

beforeAll(async () => {
  const dataDir = join(mkdtempSync(join(tmpdir(), "console-")), "data");
  const base = ["-m", "crisischain", "--data-dir", dataDir, "--seed", "7"];
  const init = spawnSync("python3", [...base, "pkg", "init", "--engine", "toy"], {
    env: { ...process.env, CRISISCHAIN_CLOCK_START: "1700000000" },
  });
  if (init.status !== 0) throw new Error(String(init.stderr));
  server = spawn(
    "python3",
    [...base, "gateway", "serve", "--port", String(PORT)],
    { env: { ...process.env, CRISISCHAIN_CLOCK_START: "1700000000" }, stdio: "ignore" },
  );
  await waitForGateway();
}, 30000);

afterAll(() => {
  server?.kill();
});

describe("console workflows against a live gateway", () => {
  let eventId: string;

  it("create then ratify flips the rendered badge to Verified", async () => {
    const created = await client.createEvent({
      actor: "alice", entity: "org-a", lat: 28.468, lon: -16.254,
      kind: "fire", risk_level: 3,
    });
    eventId = created.contract.event_id;

    let events = (await client.listEvents()).events as EventView[];
    let html = renderEventBoard(events);
    expect(html).toContain("state-created");
    expect(html).not.toContain("state-verified");

    await client.ratify(eventId, "bob", 28.469, -16.254);
    events = (await client.listEvents()).events as EventView[];
    html = renderEventBoard(events);
    expect(html).toContain("state-verified");
  });

  it("broadcast reaches every open session's chat pane", async () => {
    await client.assignWorkers(eventId, "alice", [
      { identity: "medic-1", entity: "org-a", user: "u1" },
      { identity: "medic-2", entity: "org-a", user: "u2" },
      { identity: "medic-3", entity: "org-b", user: "u3" },
    ]);
    const sessions: Record<string, { token: string; store: ChatStore }> = {};
    for (const who of ["medic-1", "medic-2", "medic-3"]) {
      const token = await client.openSession(who);
      await client.issueKeys(token, eventId);
      sessions[who] = { token, store: new ChatStore() };
    }
    await client.sendBroadcast(eventId, sessions["medic-1"].token, "regroup at base");
    for (const who of ["medic-2", "medic-3"]) {
      const s = sessions[who];
      s.store.applyInbox(await client.inbox(eventId, s.token, s.store.cursor));
      expect(s.store.messages.map((m) => m.text)).toContain("regroup at base");
      expect(s.store.rejected).toBe(0);
    }
  });

  it("p2p is visible only to its target", async () => {
    const t1 = await client.openSession("medic-1");
    await client.issueKeys(t1, eventId);
    const t3 = await client.openSession("medic-3");
    await client.issueKeys(t3, eventId);
    await client.sendP2p(eventId, t1, "medic-2", "only for two");
    const three = new ChatStore();
    three.applyInbox(await client.inbox(eventId, t3, 0));
    expect(three.messages.map((m) => m.text)).not.toContain("only for two");
  });

  it("unauthorized kill surfaces the error and leaves state unchanged", async () => {
    const err = await client.killEvent(eventId, "carol").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.code).toBe("unauthorized");
    const after = await client.getEvent(eventId);
    expect(after.state).toBe("Verified");
  });

  it("the chain stays valid under console traffic", async () => {
    expect(await client.validateChain()).toEqual({ valid: true, bad_index: null });
  });
});
