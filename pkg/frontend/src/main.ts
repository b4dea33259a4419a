// Console wiring: 2-second polling against the gateway, an event board
// with map, participant and chat panels for the selected event, and
// toast rendering for every ApiError code.  State transitions are only
// ever taken from gateway responses; optimistic paints are reverted by
// the next poll if the backend refused the action.

import { ApiError, GatewayClient } from "./api.js";
import { renderEventBoard, renderMap } from "./board.js";
import { ChatStore, renderChatPane } from "./chat.js";
import { EventView } from "./model.js";
import { renderParticipants } from "./participants.js";

const POLL_MS = 2000;
const STALE_AFTER_MS = 3 * POLL_MS;

const el = (id: string) => document.getElementById(id)!;

class ConsoleApp {
  client = new GatewayClient(
    (window as { GATEWAY_URL?: string }).GATEWAY_URL ?? "http://127.0.0.1:8787",
  );
  events: EventView[] = [];
  selected: string | null = null;
  lastPoll = 0;
  token: string | null = null;
  actor = "alice";
  chat = new ChatStore();

  async start() {
    el("actor").addEventListener("change", () => {
      this.actor = (el("actor") as HTMLInputElement).value.trim();
      this.token = null;
      this.chat = new ChatStore();
    });
    el("create-form").addEventListener("submit", (e) => this.onCreate(e));
    el("board").addEventListener("click", (e) => this.onBoardClick(e));
    el("chat-form").addEventListener("submit", (e) => this.onSend(e));
    el("assign-form").addEventListener("submit", (e) => this.onAssign(e));
    await this.poll();
    setInterval(() => void this.poll(), POLL_MS);
  }

  toast(text: string, kind = "error") {
    const box = el("toasts");
    const node = document.createElement("div");
    node.className = `toast ${kind}`;
    node.textContent = text;
    box.appendChild(node);
    setTimeout(() => node.remove(), 4000);
  }

  private handleError(err: unknown) {
    if (err instanceof ApiError) {
      this.toast(`${err.code}: ${err.detail}`);
    } else {
      this.toast(String(err));
    }
  }

  async poll() {
    try {
      const { events } = await this.client.listEvents();
      this.events = events;
      this.lastPoll = Date.now();
    } catch (err) {
      // keep the stale view; the board is flagged below
    }
    const stale = Date.now() - this.lastPoll > STALE_AFTER_MS;
    el("board").innerHTML = renderEventBoard(this.events, stale);
    el("map").innerHTML = renderMap(this.events);
    el("chain-status").textContent = await this.chainStatus();
    if (this.selected) {
      await this.refreshSelected();
    }
  }

  private async chainStatus(): Promise<string> {
    try {
      const v = await this.client.validateChain();
      return v.valid ? "chain: valid" : `chain: INVALID at block ${v.bad_index}`;
    } catch {
      return "chain: unreachable";
    }
  }

  private selectedEvent(): EventView | undefined {
    return this.events.find((e) => e.event_id === this.selected);
  }

  async refreshSelected() {
    const ev = this.selectedEvent();
    if (!ev) return;
    let ids: string[] = [];
    try {
      ids = (await this.client.getIds(ev.event_id, this.actor)).ids;
    } catch {
      // not a participant: the roster simply stays hidden
    }
    el("participants").innerHTML = renderParticipants(ev, ids);
    if (this.token) {
      try {
        this.chat.applyInbox(await this.client.inbox(ev.event_id, this.token, this.chat.cursor));
      } catch (err) {
        this.handleError(err);
      }
    }
    el("chat").innerHTML = renderChatPane(this.chat, this.actor);
  }

  async ensureSession(eventId: string) {
    if (!this.token) {
      this.token = await this.client.openSession(this.actor);
      await this.client.issueKeys(this.token, eventId);
    }
  }

  async onBoardClick(e: Event) {
    const target = e.target as HTMLElement;
    const row = target.closest<HTMLElement>("[data-event]");
    if (!row) return;
    const eventId = row.dataset.event!;
    const action = target.dataset.action;
    if (!action) {
      this.selected = eventId;
      this.chat = new ChatStore();
      try {
        await this.ensureSession(eventId);
      } catch (err) {
        this.handleError(err);
      }
      await this.refreshSelected();
      return;
    }
    const ev = this.events.find((x) => x.event_id === eventId);
    if (!ev) return;
    try {
      if (action === "ratify") {
        await this.client.ratify(eventId, this.actor, ev.lat, ev.lon);
      } else if (action === "abort") {
        await this.client.updateState(eventId, this.actor, ev.risk_level, "Inactive");
      } else if (action === "kill") {
        await this.client.killEvent(eventId, this.actor);
      }
      this.toast(`${action} ok`, "success");
    } catch (err) {
      this.handleError(err);
    }
    await this.poll();
  }

  async onCreate(e: Event) {
    e.preventDefault();
    const form = e.target as HTMLFormElement;
    const data = new FormData(form);
    try {
      await this.client.createEvent({
        actor: this.actor,
        entity: String(data.get("entity")),
        lat: Number(data.get("lat")),
        lon: Number(data.get("lon")),
        kind: String(data.get("kind")),
        risk_level: Number(data.get("risk")),
      });
      this.toast("event created", "success");
      form.reset();
    } catch (err) {
      this.handleError(err);
    }
    await this.poll();
  }

  async onAssign(e: Event) {
    e.preventDefault();
    if (!this.selected) return;
    const data = new FormData(e.target as HTMLFormElement);
    const identity = String(data.get("identity"));
    const entity = String(data.get("worker-entity"));
    try {
      await this.client.assignWorkers(this.selected, this.actor, [
        { identity, entity, user: `addr-${identity}` },
      ]);
      this.toast(`assigned ${identity}`, "success");
    } catch (err) {
      this.handleError(err);
    }
    await this.poll();
  }

  async onSend(e: Event) {
    e.preventDefault();
    if (!this.selected || !this.token) return;
    const data = new FormData(e.target as HTMLFormElement);
    const text = String(data.get("text"));
    const mode = String(data.get("mode"));
    const to = String(data.get("to") ?? "");
    try {
      if (mode === "p2p") {
        await this.client.sendP2p(this.selected, this.token, to, text);
      } else {
        await this.client.sendBroadcast(this.selected, this.token, text);
      }
      (e.target as HTMLFormElement).reset();
    } catch (err) {
      this.handleError(err);
    }
    await this.refreshSelected();
  }
}

new ConsoleApp().start();
