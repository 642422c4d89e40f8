import type {
  EvalResponse,
  ModelSummary,
  PolicyEnvelope,
  ScoreReport,
  SegmentResponse,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** Thin typed client; every number displayed in the UI comes verbatim from
 * these responses — the client never recomputes scores or decisions. */
export class ApiClient {
  constructor(
    private readonly base: string,
    private readonly fetchImpl: FetchLike = (u, i) => fetch(u, i),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.base + path, init);
    if (!resp.ok) {
      let detail = `${resp.status}`;
      try {
        const body = (await resp.json()) as { error?: string };
        if (body.error) detail = body.error;
      } catch {
        /* non-JSON error body */
      }
      throw new Error(`API ${path} failed: ${detail}`);
    }
    return (await resp.json()) as T;
  }

  modelSummary(): Promise<ModelSummary> {
    return this.request<ModelSummary>("/api/model/summary");
  }

  getPolicy(): Promise<PolicyEnvelope> {
    return this.request<PolicyEnvelope>("/api/policy");
  }

  putPolicy(policy: PolicyEnvelope): Promise<PolicyEnvelope> {
    return this.request<PolicyEnvelope>("/api/policy", {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(policy),
    });
  }

  score(imageB64: string, id?: string, anomalyMapB64?: string): Promise<ScoreReport> {
    const payload: Record<string, string> = { image: imageB64 };
    if (id) payload.id = id;
    if (anomalyMapB64) payload.anomaly_map = anomalyMapB64;
    return this.request<ScoreReport>("/api/score", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  segment(imageB64: string, id?: string): Promise<SegmentResponse> {
    return this.request<SegmentResponse>("/api/segment", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(id ? { image: imageB64, id } : { image: imageB64 }),
    });
  }

  evaluate(datasetPath: string): Promise<EvalResponse> {
    return this.request<EvalResponse>("/api/eval", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ dataset: datasetPath }),
    });
  }

  overlayUrl(path: string): string {
    return this.base + path;
  }
}
