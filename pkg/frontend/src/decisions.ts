import type { ApiClient } from "./api.js";
import type { EvalResponse, ScoreReport } from "./types.js";

export interface ValidationImage {
  id: string;
  imageB64: string;
  expected: 0 | 1; // operator-supplied ground truth for the confusion summary
}

export interface ConfusionSummary {
  truePositive: number;
  falsePositive: number;
  trueNegative: number;
  falseNegative: number;
}

export interface LiveRow {
  id: string;
  report: ScoreReport;
}

/** Live decision table over a loaded validation set. Every refresh re-asks
 * the server for each image, so rows always reflect the committed policy;
 * an in-flight refresh is dropped when a newer one starts. */
export class DecisionTable {
  private rows_: LiveRow[] = [];
  private evalResult: EvalResponse | null = null;
  private generation = 0;

  constructor(
    private readonly api: ApiClient,
    private images: ValidationImage[] = [],
  ) {}

  load(images: ValidationImage[]): void {
    this.images = images.slice();
    this.rows_ = [];
    this.evalResult = null;
  }

  get rows(): readonly LiveRow[] {
    return this.rows_;
  }

  get lastEval(): EvalResponse | null {
    return this.evalResult;
  }

  async refresh(): Promise<LiveRow[] | null> {
    const my = ++this.generation;
    const fresh: LiveRow[] = [];
    for (const image of this.images) {
      const report = await this.api.score(image.imageB64, image.id);
      if (my !== this.generation) return null; // a newer refresh superseded us
      fresh.push({ id: image.id, report });
    }
    this.rows_ = fresh;
    return fresh;
  }

  async refreshEval(datasetPath: string): Promise<EvalResponse | null> {
    const my = this.generation;
    const result = await this.api.evaluate(datasetPath);
    if (my !== this.generation) return null;
    this.evalResult = result;
    return result;
  }

  confusion(): ConfusionSummary {
    const summary: ConfusionSummary = {
      truePositive: 0,
      falsePositive: 0,
      trueNegative: 0,
      falseNegative: 0,
    };
    const expected = new Map(this.images.map((im) => [im.id, im.expected]));
    for (const row of this.rows_) {
      const truth = expected.get(row.id);
      if (truth === undefined) continue;
      const flagged = row.report.decision === "anomalous";
      if (truth === 1) {
        if (flagged) summary.truePositive += 1;
        else summary.falseNegative += 1;
      } else {
        if (flagged) summary.falsePositive += 1;
        else summary.trueNegative += 1;
      }
    }
    return summary;
  }
}

/** Exact passthrough for display: the cell text is the JSON number the
 * server sent, so what the operator reads is what a direct API call returns. */
export function displayScore(value: number): string {
  return JSON.stringify(value);
}
