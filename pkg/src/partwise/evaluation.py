"""AUROC evaluation and the benchmark/ablation harness."""

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from . import detector as det
from .config import merge_config, validate_config
from .dataset import load_image, relative_id, test_images
from .exceptions import DataError, ParameterError
from .policy import PolicyConfig


def auroc(scores, labels) -> float:
    """Rank-based AUROC with average-rank tie handling.

    Equals the probability that a random anomalous score exceeds a random
    normal score, counting ties as one half. Requires both labels present.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ParameterError("scores and labels must be equal-length 1-D sequences")
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ParameterError("AUROC needs at least one normal and one anomalous score")
    ranks = rankdata(scores, method="average")
    r_pos = ranks[labels == 1].sum()
    return float((r_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


@dataclass
class BenchmarkResult:
    records: list = field(default_factory=list)  # per image: id, label, kind, d_g, d_h, d
    auroc_overall: float = float("nan")
    auroc_by_kind: dict = field(default_factory=dict)

    def to_jsonl(self) -> str:
        lines = [json.dumps(r, sort_keys=True) for r in self.records]
        summary = {
            "summary": True,
            "auroc_overall": self.auroc_overall,
            "auroc_by_kind": self.auroc_by_kind,
        }
        lines.append(json.dumps(summary, sort_keys=True))
        return "\n".join(lines) + "\n"

    def format_table(self) -> str:
        rows = [("kind", "n", "auroc")]
        rows.append(("ALL", str(len(self.records)), f"{self.auroc_overall:.4f}"))
        for kind in sorted(self.auroc_by_kind):
            n = sum(1 for r in self.records if r["kind"] == kind)
            rows.append((kind, str(n), f"{self.auroc_by_kind[kind]:.4f}"))
        widths = [max(len(r[i]) for r in rows) for i in range(3)]
        fmt = "  ".join("{:<%d}" % w for w in widths)
        return "\n".join(fmt.format(*r) for r in rows) + "\n"


def _summarize(records) -> BenchmarkResult:
    labels = [r["label"] for r in records]
    scores = [r["d"] for r in records]
    if len(set(labels)) < 2:
        raise DataError("benchmark needs both normal and anomalous test images")
    result = BenchmarkResult(records=records)
    result.auroc_overall = auroc(scores, labels)
    normal_scores = [r["d"] for r in records if r["label"] == 0]
    for kind in sorted({r["kind"] for r in records if r["label"] == 1}):
        kind_scores = [r["d"] for r in records if r["kind"] == kind]
        result.auroc_by_kind[kind] = auroc(
            normal_scores + kind_scores, [0] * len(normal_scores) + [1] * len(kind_scores)
        )
    return result


def benchmark_records(model, policy, entries) -> list:
    """Score (image, label, kind, image_id) tuples into report records."""
    records = []
    for image, label, kind, image_id in entries:
        rep = det.score_image(image, model, policy=policy, image_id=image_id)
        records.append(
            {
                "id": image_id,
                "label": int(label),
                "kind": kind,
                "d_g": rep.d_g,
                "d_h": rep.d_h,
                "d": rep.d,
                "decision": rep.decision,
            }
        )
    return records


def run_benchmark(model, policy: PolicyConfig | None, dataset_dir) -> BenchmarkResult:
    """Score every test image of an MVTec-style dataset and compute AUROCs."""
    entries = [
        (load_image(p), label, kind, relative_id(p, dataset_dir))
        for p, label, kind in test_images(dataset_dir)
    ]
    return _summarize(benchmark_records(model, policy, entries))


def run_benchmark_arrays(model, policy, samples) -> BenchmarkResult:
    """Same as run_benchmark but over in-memory ProductSample records."""
    entries = [(s.image, s.label, s.kind, f"{s.kind}/{s.index:04d}") for s in samples]
    return _summarize(benchmark_records(model, policy, entries))


ABLATION_VARIANTS = (
    ("baseline", {}),
    ("no_crf", {"segmentation.crf.enabled": False}),
    ("region_argmax", {"region.method": "argmax"}),
    ("region_otsu", {"region.method": "otsu"}),
    ("region_adaptive_otsu", {"region.method": "adaptive_otsu"}),
    ("features_A", {"metrology.features": "A"}),
    ("features_A_Co", {"metrology.features": "A+Co"}),
)


def run_ablations(train_images_list, train_ids, test_samples, base_config, variants=ABLATION_VARIANTS):
    """Retrain and evaluate under each config variant; returns result rows."""
    rows = []
    for name, overrides in variants:
        cfg = validate_config(merge_config(base_config, overrides))
        model = det.train_from_images(train_images_list, train_ids, cfg)
        result = run_benchmark_arrays(model, None, test_samples)
        rows.append(
            {
                "variant": name,
                "auroc_overall": result.auroc_overall,
                "auroc_by_kind": result.auroc_by_kind,
            }
        )
    return rows


def format_ablation_table(rows) -> str:
    kinds = sorted({k for r in rows for k in r["auroc_by_kind"]})
    header = ["variant", "overall"] + kinds
    table = [header]
    for r in rows:
        table.append(
            [r["variant"], f"{r['auroc_overall']:.4f}"]
            + [f"{r['auroc_by_kind'].get(k, float('nan')):.4f}" for k in kinds]
        )
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    fmt = "  ".join("{:<%d}" % w for w in widths)
    return "\n".join(fmt.format(*row) for row in table) + "\n"
