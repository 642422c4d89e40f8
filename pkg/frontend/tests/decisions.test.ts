import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { DecisionTable, displayScore } from "../src/decisions.js";
import { PolicyDraft } from "../src/policy.js";
import { FakeServer } from "./fake-server.js";

function setup() {
  const server = new FakeServer();
  const api = new ApiClient("http://test", server.fetch);
  return { server, api };
}

describe("live decision table", () => {
  it("weight-zeroing flips a component-confined anomaly back to normal", async () => {
    const { server, api } = setup();
    // the documented test image deviates only in component 2
    server.images.set("probe.png", { deviations: { 2: 3.0 } });
    server.policy.global_threshold = 1.0;

    const table = new DecisionTable(api, [
      { id: "probe.png", imageB64: "xxx", expected: 1 },
    ]);
    await table.refresh();
    expect(table.rows[0]!.report.decision).toBe("anomalous");

    // operator zeroes component 2's weight and commits
    const draft = PolicyDraft.fromServer(await api.getPolicy());
    draft.setWeight(2, 0.0);
    await api.putPolicy(draft.toEnvelope());
    await table.refresh();
    expect(table.rows[0]!.report.decision).toBe("normal");
    expect(table.rows[0]!.report.d).toBe(0);
  });

  it("per-component threshold below an attribution flips the decision", async () => {
    const { server, api } = setup();
    server.images.set("a.png", { deviations: { 3: 0.8 } });
    const table = new DecisionTable(api, [{ id: "a.png", imageB64: "x", expected: 0 }]);
    await table.refresh();
    expect(table.rows[0]!.report.decision).toBe("normal");

    server.policy.thresholds = { "3": 0.5 };
    await table.refresh();
    expect(table.rows[0]!.report.decision).toBe("anomalous");
  });

  it("displayed scores are the server's numbers bit for bit", async () => {
    const { server, api } = setup();
    server.images.set("b.png", { deviations: { 1: 0.123456789012345 } });
    const table = new DecisionTable(api, [{ id: "b.png", imageB64: "x", expected: 0 }]);
    await table.refresh();
    const direct = await api.score("x", "b.png");
    expect(displayScore(table.rows[0]!.report.d)).toBe(JSON.stringify(direct.d));
    expect(displayScore(table.rows[0]!.report.d_g)).toBe(JSON.stringify(direct.d_g));
  });

  it("confusion summary counts against operator expectations", async () => {
    const { server, api } = setup();
    server.policy.global_threshold = 1.0;
    server.images.set("good.png", { deviations: {} });
    server.images.set("defect.png", { deviations: { 1: 5.0 } });
    server.images.set("missed-defect.png", { deviations: { 1: 0.2 } });
    const table = new DecisionTable(api, [
      { id: "good.png", imageB64: "x", expected: 0 },
      { id: "defect.png", imageB64: "x", expected: 1 },
      { id: "missed-defect.png", imageB64: "x", expected: 1 },
    ]);
    await table.refresh();
    expect(table.confusion()).toEqual({
      truePositive: 1,
      falsePositive: 0,
      trueNegative: 1,
      falseNegative: 1,
    });
  });

  it("a superseded refresh never overwrites newer rows", async () => {
    const { server, api } = setup();
    server.images.set("c.png", { deviations: { 1: 1.0 } });
    const table = new DecisionTable(api, [{ id: "c.png", imageB64: "x", expected: 0 }]);
    const first = table.refresh();
    const second = table.refresh();
    const [a, b] = await Promise.all([first, second]);
    expect(a).toBeNull(); // cancelled by the newer request
    expect(b).not.toBeNull();
    expect(table.rows.length).toBe(1);
  });

  it("eval results come from the server and refresh per policy", async () => {
    const { server, api } = setup();
    server.images.set("good.png", { deviations: {} });
    server.images.set("defect-1.png", { deviations: { 2: 4 } });
    const table = new DecisionTable(api, []);
    const result = await table.refreshEval("/data/val");
    expect(result!.auroc_by_kind.defect).toBeCloseTo(0.97);
    expect(table.lastEval).toBe(result);
    expect(server.requests).toContain("POST /api/eval");
  });
});
