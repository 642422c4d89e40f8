import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { PolicyDraft } from "../src/policy.js";
import { FakeServer } from "./fake-server.js";

describe("policy draft", () => {
  it("round-trips through GET and PUT without loss", async () => {
    const server = new FakeServer();
    const api = new ApiClient("http://test", server.fetch);
    const draft = PolicyDraft.fromServer(await api.getPolicy());
    draft.setWeight(2, 0.25);
    draft.setThreshold(3, 1.5);
    draft.setGlobalThreshold(4.0);
    draft.setIgnoreBackground(false);
    expect(draft.dirty).toBe(true);

    const echoed = await api.putPolicy(draft.toEnvelope());
    draft.adopt(echoed);
    expect(draft.dirty).toBe(false);

    const fetched = await api.getPolicy();
    expect(fetched).toEqual(echoed);
    const again = PolicyDraft.fromServer(fetched);
    expect(again.toEnvelope()).toEqual(draft.toEnvelope());
    expect(again.weightFor(2)).toBe(0.25);
    expect(again.thresholdFor(3)).toBe(1.5);
    expect(again.global).toBe(4.0);
    expect(again.background).toBe(false);
  });

  it("defaults unknown components to weight 1 and no threshold", () => {
    const draft = PolicyDraft.fromServer({
      policy: { weights: {}, thresholds: {}, global_threshold: null, ignore_background: true },
    });
    expect(draft.weightFor(7)).toBe(1.0);
    expect(draft.thresholdFor(7)).toBeNull();
  });

  it("rejects negative weights locally", () => {
    const draft = PolicyDraft.fromServer({
      policy: { weights: {}, thresholds: {}, global_threshold: null, ignore_background: true },
    });
    expect(() => draft.setWeight(1, -0.5)).toThrow(/>= 0/);
  });

  it("clearing a threshold removes it from the envelope", () => {
    const draft = PolicyDraft.fromServer({
      policy: {
        weights: {},
        thresholds: { "2": 3.0 },
        global_threshold: null,
        ignore_background: true,
      },
    });
    draft.setThreshold(2, null);
    expect(draft.toEnvelope().policy.thresholds).toEqual({});
  });

  it("server rejects invalid weights and keeps state", async () => {
    const server = new FakeServer();
    const api = new ApiClient("http://test", server.fetch);
    await expect(
      api.putPolicy({
        policy: {
          weights: { "1": -2 },
          thresholds: {},
          global_threshold: null,
          ignore_background: true,
        },
      }),
    ).rejects.toThrow(/bad weight/);
    const current = await api.getPolicy();
    expect(current.policy.weights).toEqual({});
  });
});
