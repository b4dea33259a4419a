// Typed client for the gateway HTTP/JSON API.  The console talks to the
// backend exclusively through this module; it holds no cryptography, so
// sessions are opened console-grade (no client key pair, no sealed
// material) and all chat protection happens on the gateway.

import type { EventView, InboxResponse, Worker } from "./model.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    public detail: string,
    public extra: Record<string, unknown> = {},
  ) {
    super(`${code}: ${detail}`);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface DeliveryReceipt {
  delivered: [string, string][];
  undeliverable: [string, string][];
}

export class GatewayClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    const data = await resp.json().catch(() => ({}));
    if (!resp.ok) {
      const { code = "error", detail = resp.statusText, ...extra } = data;
      throw new ApiError(resp.status, code, detail, extra);
    }
    return data as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  // -- events ------------------------------------------------------------
  listEvents(state?: string): Promise<{ events: EventView[] }> {
    const q = state ? `?state=${encodeURIComponent(state)}` : "";
    return this.request(`/events${q}`);
  }

  getEvent(eventId: string): Promise<EventView> {
    return this.request(`/events/${eventId}`);
  }

  createEvent(body: {
    actor: string;
    entity: string;
    lat: number;
    lon: number;
    kind: string;
    risk_level: number;
  }): Promise<{ contract: EventView; block_hash: string }> {
    return this.post("/events", body);
  }

  ratify(eventId: string, actor: string, lat: number, lon: number) {
    return this.post<{ state: string; block_hash: string }>(
      `/events/${eventId}/ratify`,
      { actor, lat, lon },
    );
  }

  assignWorkers(eventId: string, actor: string, workers: Omit<Worker, "event_id">[]) {
    return this.post<{ contract: EventView; block_hash: string }>(
      `/events/${eventId}/participants`,
      { actor, workers },
    );
  }

  updateState(eventId: string, actor: string, riskLevel: number, state: string) {
    return this.post<{ contract: EventView; block_hash: string }>(
      `/events/${eventId}/state`,
      { actor, risk_level: riskLevel, state },
    );
  }

  killEvent(eventId: string, actor: string) {
    return this.request<{ contract: EventView; block_hash: string }>(
      `/events/${eventId}?actor=${encodeURIComponent(actor)}`,
      { method: "DELETE" },
    );
  }

  getIds(eventId: string, requester: string): Promise<{ ids: string[] }> {
    return this.request(`/events/${eventId}/ids?requester=${encodeURIComponent(requester)}`);
  }

  // -- chain ----------------------------------------------------------------
  validateChain(): Promise<{ valid: boolean; bad_index: number | null }> {
    return this.request("/chain/validate");
  }

  chainLength(): Promise<number> {
    return this.request<{ length: number }>("/chain?limit=1").then((d) => d.length);
  }

  // -- sessions and chat -------------------------------------------------------
  async openSession(actorId: string): Promise<string> {
    const data = await this.post<{ token: string }>("/keys/dh", { actor_id: actorId });
    return data.token;
  }

  issueKeys(token: string, eventId: string) {
    return this.post<{ registered: boolean }>("/keys/issue", {
      token,
      event_id: eventId,
    });
  }

  sendP2p(eventId: string, token: string, to: string, text: string) {
    return this.post<DeliveryReceipt>(`/chat/${eventId}/p2p`, { token, to, text });
  }

  sendBroadcast(eventId: string, token: string, text: string) {
    return this.post<DeliveryReceipt>(`/chat/${eventId}/broadcast`, { token, text });
  }

  inbox(eventId: string, token: string, since: number): Promise<InboxResponse> {
    return this.request(
      `/chat/${eventId}/inbox?token=${encodeURIComponent(token)}&since=${since}`,
    );
  }
}
