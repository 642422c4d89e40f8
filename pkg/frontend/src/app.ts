import { ApiClient } from "./api.js";
import { DecisionTable, displayScore, ValidationImage } from "./decisions.js";
import { PolicyDraft } from "./policy.js";
import type { ModelSummary, ScoreReport } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function readAsBase64(file: File): Promise<string> {
  return new Promise((resolve, reject) => {
    const reader = new FileReader();
    reader.onerror = () => reject(reader.error);
    reader.onload = () => {
      const url = String(reader.result);
      resolve(url.slice(url.indexOf(",") + 1));
    };
    reader.readAsDataURL(file);
  });
}

function banner(message: string, isError = true): void {
  const box = el<HTMLDivElement>("banner");
  box.textContent = message;
  box.className = isError ? "banner error" : "banner ok";
  box.style.display = message ? "block" : "none";
}

class Dashboard {
  private api!: ApiClient;
  private summary!: ModelSummary;
  private draft!: PolicyDraft;
  private table!: DecisionTable;
  private validation: ValidationImage[] = [];

  async connect(base: string): Promise<void> {
    this.api = new ApiClient(base.replace(/\/$/, ""));
    this.summary = await this.api.modelSummary();
    this.draft = PolicyDraft.fromServer(await this.api.getPolicy());
    this.table = new DecisionTable(this.api);
    this.renderSummary();
    this.renderPolicyControls();
    banner(`connected: ${this.summary.kept_ids.length} kept components`, false);
  }

  private renderSummary(): void {
    const s = this.summary;
    el<HTMLDivElement>("summary").innerHTML = `
      <p>K = ${s.k_total}, kept ${JSON.stringify(s.kept_ids)},
         noise ${JSON.stringify(s.noise_ids)}, background ${JSON.stringify(s.background_ids)},
         trained on ${s.n_train} images at ${s.input_size}px</p>
      <p>OTSU scales: ${Object.entries(s.scales)
        .map(([k, v]) => `c*(${k})=${v}`)
        .join(", ")}</p>`;
  }

  private renderPolicyControls(): void {
    const host = el<HTMLDivElement>("policy");
    host.innerHTML = "";
    for (const comp of this.summary.kept_ids) {
      const row = document.createElement("div");
      row.className = "policy-row";
      const weight = this.draft.weightFor(comp);
      const threshold = this.draft.thresholdFor(comp);
      row.innerHTML = `
        <span class="comp">component ${comp}</span>
        <label>w <input type="range" min="0" max="2" step="0.05" value="${weight}"
               data-kind="weight" data-comp="${comp}"></label>
        <span class="val" id="wval-${comp}">${weight.toFixed(2)}</span>
        <label>t <input type="number" step="0.1" value="${threshold ?? ""}"
               placeholder="off" data-kind="threshold" data-comp="${comp}"></label>`;
      host.appendChild(row);
    }
    const tail = document.createElement("div");
    tail.className = "policy-row";
    tail.innerHTML = `
      <label>global threshold
        <input id="global-threshold" type="number" step="0.1"
               value="${this.draft.global ?? ""}" placeholder="off"></label>
      <label><input id="ignore-bg" type="checkbox"
               ${this.draft.background ? "checked" : ""}> ignore background</label>
      <button id="commit-policy">apply policy</button>`;
    host.appendChild(tail);

    host.addEventListener("input", (ev) => {
      const input = ev.target as HTMLInputElement;
      const comp = Number(input.dataset.comp);
      if (input.dataset.kind === "weight") {
        this.draft.setWeight(comp, Number(input.value));
        el<HTMLSpanElement>(`wval-${comp}`).textContent = Number(input.value).toFixed(2);
      } else if (input.dataset.kind === "threshold") {
        this.draft.setThreshold(comp, input.value === "" ? null : Number(input.value));
      }
    });
    el<HTMLInputElement>("global-threshold").addEventListener("input", (ev) => {
      const v = (ev.target as HTMLInputElement).value;
      this.draft.setGlobalThreshold(v === "" ? null : Number(v));
    });
    el<HTMLInputElement>("ignore-bg").addEventListener("change", (ev) => {
      this.draft.setIgnoreBackground((ev.target as HTMLInputElement).checked);
    });
    el<HTMLButtonElement>("commit-policy").addEventListener("click", () => {
      void this.commitPolicy();
    });
  }

  private async commitPolicy(): Promise<void> {
    try {
      const echoed = await this.api.putPolicy(this.draft.toEnvelope());
      this.draft.adopt(echoed);
      banner("policy applied", false);
      await this.refreshTable();
    } catch (err) {
      banner(String(err));
    }
  }

  async loadValidation(files: FileList): Promise<void> {
    const images: ValidationImage[] = [];
    for (const file of Array.from(files)) {
      const expected: 0 | 1 = /anomal|defect|bad/i.test(file.name) ? 1 : 0;
      images.push({ id: file.name, imageB64: await readAsBase64(file), expected });
    }
    this.validation = images;
    this.table.load(images);
    await this.refreshTable();
  }

  private async refreshTable(): Promise<void> {
    if (!this.validation.length) return;
    try {
      const rows = await this.table.refresh();
      if (!rows) return; // superseded by a newer refresh
      const body = rows
        .map(
          (row) => `<tr class="${row.report.decision}">
            <td>${row.id}</td>
            <td>${displayScore(row.report.d_g)}</td>
            <td>${displayScore(row.report.d_h)}</td>
            <td>${displayScore(row.report.d)}</td>
            <td>${row.report.decision}</td>
          </tr>`,
        )
        .join("");
      el<HTMLTableSectionElement>("table-body").innerHTML = body;
      const c = this.table.confusion();
      el<HTMLDivElement>("confusion").textContent =
        `TP ${c.truePositive}  FP ${c.falsePositive}  TN ${c.trueNegative}  FN ${c.falseNegative}`;
    } catch (err) {
      banner(String(err));
    }
  }

  async runEval(datasetPath: string): Promise<void> {
    try {
      const result = await this.table.refreshEval(datasetPath);
      if (!result) return;
      const parts = Object.entries(result.auroc_by_kind)
        .map(([kind, v]) => `${kind}: ${v.toFixed(4)}`)
        .join("  ");
      el<HTMLDivElement>("eval-out").textContent =
        `AUROC overall ${result.auroc_overall.toFixed(4)}  ${parts}`;
    } catch (err) {
      banner(String(err));
    }
  }

  async inspect(file: File, anomalyMap?: File): Promise<void> {
    try {
      const b64 = await readAsBase64(file);
      const mapB64 = anomalyMap ? await readAsBase64(anomalyMap) : undefined;
      const report = await this.api.score(b64, file.name, mapB64);
      const seg = await this.api.segment(b64, file.name);
      this.renderReport(report);
      if (report.overlay) {
        el<HTMLImageElement>("overlay").src = this.api.overlayUrl(report.overlay);
      }
      el<HTMLDivElement>("segments").textContent = seg.components
        .map((comp) => `component ${comp.id}: ${comp.area}px`)
        .join("  ");
    } catch (err) {
      banner(String(err));
    }
  }

  private renderReport(report: ScoreReport): void {
    const ranked = report.attributions
      .map(([comp, v]) => `<li>component ${comp}: ${displayScore(v)}</li>`)
      .join("");
    const classified =
      report.classified_component === undefined
        ? ""
        : `<p>external anomaly → <strong>${report.classified_component}</strong>
           (masked peak ${displayScore(report.masked_peak_score ?? 0)})</p>`;
    el<HTMLDivElement>("report").innerHTML = `
      <p class="${report.decision}">
        D_G ${displayScore(report.d_g)} · D_H ${displayScore(report.d_h)}
        · D ${displayScore(report.d)} → <strong>${report.decision}</strong></p>
      <ol>${ranked}</ol>${classified}`;
  }
}

export function start(): void {
  const dash = new Dashboard();
  el<HTMLButtonElement>("connect").addEventListener("click", () => {
    const base = el<HTMLInputElement>("api-base").value;
    dash.connect(base).catch((err) => banner(String(err)));
  });
  el<HTMLInputElement>("validation-files").addEventListener("change", (ev) => {
    const files = (ev.target as HTMLInputElement).files;
    if (files) void dash.loadValidation(files);
  });
  el<HTMLButtonElement>("run-eval").addEventListener("click", () => {
    void dash.runEval(el<HTMLInputElement>("dataset-path").value);
  });
  const runInspect = () => {
    const files = el<HTMLInputElement>("inspect-file").files;
    const maps = el<HTMLInputElement>("inspect-map").files;
    if (files && files[0]) void dash.inspect(files[0], maps?.[0] ?? undefined);
  };
  el<HTMLInputElement>("inspect-file").addEventListener("change", runInspect);
  el<HTMLInputElement>("inspect-map").addEventListener("change", runInspect);
}

if (typeof document !== "undefined" && document.getElementById("connect")) {
  start();
}
