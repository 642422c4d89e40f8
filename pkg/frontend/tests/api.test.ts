import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { FakeServer } from "./fake-server.js";

describe("api client", () => {
  it("fetches the model summary", async () => {
    const server = new FakeServer();
    const api = new ApiClient("http://test", server.fetch);
    const summary = await api.modelSummary();
    expect(summary.kept_ids).toEqual([1, 2, 3]);
    expect(summary.input_size).toBe(128);
  });

  it("surfaces server error messages", async () => {
    const server = new FakeServer();
    const api = new ApiClient("http://test", server.fetch);
    await expect(api.evaluate("")).resolves.toBeTruthy();
    const bad = new ApiClient("http://test", async () =>
      new Response(JSON.stringify({ error: "no overlay stored" }), { status: 404 }),
    );
    await expect(bad.modelSummary()).rejects.toThrow(/no overlay stored/);
  });

  it("segment responses decode against the declared size", async () => {
    const server = new FakeServer();
    const api = new ApiClient("http://test", server.fetch);
    const seg = await api.segment("imgdata", "x.png");
    const { rleToMask } = await import("../src/rle.js");
    for (const comp of seg.components) {
      const mask = rleToMask(comp.rle, seg.size[0], seg.size[1]);
      let area = 0;
      for (const v of mask) area += v;
      expect(area).toBe(comp.area);
    }
  });

  it("builds overlay urls against the api base", () => {
    const api = new ApiClient("http://host:9", async () => new Response("{}"));
    expect(api.overlayUrl("/api/images/x/overlay")).toBe(
      "http://host:9/api/images/x/overlay",
    );
  });

  it("score with an anomaly map returns its classified component", async () => {
    const server = new FakeServer();
    server.images.set("lead.png", { deviations: { 2: 1.5 } });
    const api = new ApiClient("http://test", server.fetch);
    const plain = await api.score("img", "lead.png");
    expect(plain.classified_component).toBeUndefined();
    const withMap = await api.score("img", "lead.png", "mapdata");
    expect(withMap.classified_component).toBe(2);
    // background-located map masks to 0 under ignore_background
    const bg = await api.score("img", "empty.png", "mapdata");
    expect(bg.classified_component).toBe("background");
    expect(bg.masked_peak_score).toBe(0);
  });
});
