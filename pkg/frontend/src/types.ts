/** Payload shapes of the detector service API. */

export interface ModelSummary {
  k_total: number;
  kept_ids: number[];
  noise_ids: number[];
  background_ids: number[];
  scales: Record<string, number>;
  n_train: number;
  input_size: number;
  train_means: Record<string, number>;
}

export interface PolicyBody {
  weights: Record<string, number>;
  thresholds: Record<string, number>;
  global_threshold: number | null;
  ignore_background: boolean;
}

export interface PolicyEnvelope {
  policy: PolicyBody;
}

export interface ComponentSummary {
  component: number;
  area: number;
  area_norm: number;
  regions: number;
  empty: boolean;
  color?: number;
  color_norm?: number;
}

export interface ScoreReport {
  id: string;
  d_g: number;
  d_h: number;
  d: number;
  alpha: number;
  decision: "normal" | "anomalous";
  attributions: [number, number][];
  components: ComponentSummary[];
  overlay?: string;
  /** present when an external anomaly map was uploaded with the image */
  classified_component?: number | "background";
  masked_peak_score?: number;
}

export interface SegmentComponent {
  id: number;
  area: number;
  rle: number[];
}

export interface SegmentResponse {
  id: string;
  size: [number, number];
  components: SegmentComponent[];
  overlay: string;
}

export interface EvalRecord {
  id: string;
  label: number;
  kind: string;
  d_g: number;
  d_h: number;
  d: number;
  decision: string;
}

export interface EvalResponse {
  auroc_overall: number;
  auroc_by_kind: Record<string, number>;
  records: EvalRecord[];
}
