import { describe, expect, it } from "vitest";

import { ApiError, GatewayClient } from "../src/api.js";

function stubFetch(status: number, body: unknown) {
  const calls: { url: string; init?: RequestInit }[] = [];
  const impl = async (url: string, init?: RequestInit) => {
    calls.push({ url, init });
    return {
      ok: status >= 200 && status < 300,
      status,
      statusText: "stub",
      json: async () => body,
    } as Response;
  };
  return { impl, calls };
}

describe("gateway client", () => {
  it("hits the expected endpoint with a JSON body", async () => {
    const { impl, calls } = stubFetch(200, { state: "Verified", block_hash: "aa" });
    const client = new GatewayClient("http://gw", impl);
    await client.ratify("ev-1", "bob", 28.4, -16.2);
    expect(calls[0].url).toBe("http://gw/events/ev-1/ratify");
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({
      actor: "bob",
      lat: 28.4,
      lon: -16.2,
    });
  });

  it("encodes query parameters", async () => {
    const { impl, calls } = stubFetch(200, { ids: [] });
    await new GatewayClient("http://gw", impl).getIds("ev-1", "org a");
    expect(calls[0].url).toContain("requester=org%20a");
  });

  it("maps error bodies onto ApiError with the backend code", async () => {
    const { impl } = stubFetch(409, {
      code: "conflict",
      detail: "too far",
    });
    const client = new GatewayClient("http://gw", impl);
    const err = await client.ratify("ev-1", "bob", 0, 0).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(409);
    expect(err.code).toBe("conflict");
    expect(err.detail).toBe("too far");
  });

  it("keeps extra error fields like the duplicate event id", async () => {
    const { impl } = stubFetch(409, {
      code: "conflict",
      detail: "duplicate",
      existing_event_id: "ev-old",
    });
    const client = new GatewayClient("http://gw", impl);
    const err = await client
      .createEvent({ actor: "a", entity: "e", lat: 0, lon: 0, kind: "fire", risk_level: 1 })
      .catch((e) => e);
    expect(err.extra.existing_event_id).toBe("ev-old");
  });

  it("opens console-grade sessions with just the actor id", async () => {
    const { impl, calls } = stubFetch(200, { token: "t0k3n", server_pk: null });
    const token = await new GatewayClient("http://gw", impl).openSession("medic-1");
    expect(token).toBe("t0k3n");
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({ actor_id: "medic-1" });
  });
});
