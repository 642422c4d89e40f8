import type { PolicyBody, PolicyEnvelope } from "./types.js";

/** Editable mirror of the server policy. Edits only mark the draft dirty;
 * nothing takes effect until commit() PUTs it back, and the committed state
 * is whatever the server echoes (last write wins). */
export class PolicyDraft {
  private weights = new Map<number, number>();
  private thresholds = new Map<number, number>();
  private globalThreshold: number | null = null;
  private ignoreBackground = true;
  private dirtyFields = new Set<string>();

  static fromServer(envelope: PolicyEnvelope): PolicyDraft {
    const draft = new PolicyDraft();
    draft.loadBody(envelope.policy);
    return draft;
  }

  private loadBody(body: PolicyBody): void {
    this.weights = new Map(
      Object.entries(body.weights ?? {}).map(([k, v]) => [Number(k), v]),
    );
    this.thresholds = new Map(
      Object.entries(body.thresholds ?? {}).map(([k, v]) => [Number(k), v]),
    );
    this.globalThreshold = body.global_threshold ?? null;
    this.ignoreBackground = body.ignore_background ?? true;
    this.dirtyFields.clear();
  }

  get dirty(): boolean {
    return this.dirtyFields.size > 0;
  }

  weightFor(component: number): number {
    return this.weights.get(component) ?? 1.0;
  }

  thresholdFor(component: number): number | null {
    return this.thresholds.get(component) ?? null;
  }

  get background(): boolean {
    return this.ignoreBackground;
  }

  get global(): number | null {
    return this.globalThreshold;
  }

  setWeight(component: number, value: number): void {
    if (value < 0 || !Number.isFinite(value)) {
      throw new Error(`weight for component ${component} must be finite and >= 0`);
    }
    this.weights.set(component, value);
    this.dirtyFields.add(`w:${component}`);
  }

  setThreshold(component: number, value: number | null): void {
    if (value === null) {
      this.thresholds.delete(component);
    } else {
      this.thresholds.set(component, value);
    }
    this.dirtyFields.add(`t:${component}`);
  }

  setGlobalThreshold(value: number | null): void {
    this.globalThreshold = value;
    this.dirtyFields.add("global");
  }

  setIgnoreBackground(value: boolean): void {
    this.ignoreBackground = value;
    this.dirtyFields.add("background");
  }

  toEnvelope(): PolicyEnvelope {
    const weights: Record<string, number> = {};
    for (const [k, v] of this.weights) weights[String(k)] = v;
    const thresholds: Record<string, number> = {};
    for (const [k, v] of this.thresholds) thresholds[String(k)] = v;
    return {
      policy: {
        weights,
        thresholds,
        global_threshold: this.globalThreshold,
        ignore_background: this.ignoreBackground,
      },
    };
  }

  /** Adopt the server's echoed policy after a PUT; clears dirty flags. */
  adopt(envelope: PolicyEnvelope): void {
    this.loadBody(envelope.policy);
  }
}
