"""Training and scoring orchestration.

Training discovers component prototypes from a memory bank of coreset-sampled
features, freezes the reserved component set from one reference image,
calibrates per-component OTSU scales, and banks every training image's
normalized metrological features and count histograms. Scoring compares a
test image's global vector and histograms against those banks with kNN
distances and fuses them into a single score D = D_G + alpha * D_H.
"""

import math
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import counting as cnt
from . import metrology as met
from .color import rgb_to_lab
from .component_filter import select_core_components
from .config import get_dotted, validate_config
from .crf import CrfParams
from .dataset import load_image, training_images
from .exceptions import ParameterError, TrainingError
from .features import FileFeatureExtractor, MockFeatureExtractor, build_memory_bank, coreset_sample
from .imops import bilinear_resize
from .model import ComponentModel
from .policy import PolicyConfig
from .regions import calibrate_scale, extract_region
from .segmentation import ComponentPrototypes, kmeans, segment_from_features
from .validation import check_image


@dataclass
class AnomalyReport:
    image_id: str
    d_g: float
    d_h: float
    d: float
    alpha: float
    attributions: list = field(default_factory=list)  # (component id, contribution) desc
    components: list = field(default_factory=list)  # per-component summaries
    decision: str = "normal"
    classified_component: object = None

    def to_record(self) -> dict:
        return {
            "id": self.image_id,
            "d_g": self.d_g,
            "d_h": self.d_h,
            "d": self.d,
            "alpha": self.alpha,
            "decision": self.decision,
            "attributions": [[int(k), float(v)] for k, v in self.attributions],
            "components": self.components,
        }


def resize_image(img, size: int) -> np.ndarray:
    """Resize an RGB image to size x size (corner-aligned bilinear, rounded)."""
    arr = check_image(img)
    if arr.shape[0] == size and arr.shape[1] == size:
        return arr
    out = bilinear_resize(arr.astype(np.float64), size, size)
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def make_extractor(cfg):
    kind = get_dotted(cfg, "features.extractor")
    if kind == "mock":
        return MockFeatureExtractor(stride=get_dotted(cfg, "features.stride", 8))
    return FileFeatureExtractor(
        get_dotted(cfg, "features.dir"), stride=get_dotted(cfg, "features.stride", 8)
    )


def feature_map_for(extractor, img, image_id: str):
    if isinstance(extractor, FileFeatureExtractor):
        return extractor.extract_for(image_id)
    return extractor.extract(img)


def crf_kwargs(cfg) -> dict:
    return {
        "crf_on": bool(get_dotted(cfg, "segmentation.crf.enabled")),
        "crf_params": CrfParams(
            a=get_dotted(cfg, "segmentation.crf.a"),
            b=get_dotted(cfg, "segmentation.crf.b"),
            theta_alpha=get_dotted(cfg, "segmentation.crf.theta_alpha"),
            theta_beta=get_dotted(cfg, "segmentation.crf.theta_beta"),
            theta_gamma=get_dotted(cfg, "segmentation.crf.theta_gamma"),
            iterations=int(get_dotted(cfg, "segmentation.crf.iterations")),
        ),
        "crf_mode": get_dotted(cfg, "segmentation.crf.mode"),
        "crf_sample_frac": get_dotted(cfg, "segmentation.crf.sample_frac"),
        "crf_sample_min": get_dotted(cfg, "segmentation.crf.sample_min"),
        "seed": int(get_dotted(cfg, "pipeline.seed", 0)),
    }


def segment_with_config(fmap, img, protos: ComponentPrototypes, cfg) -> np.ndarray:
    return segment_from_features(
        fmap, img, protos, temperature=get_dotted(cfg, "segmentation.temperature"), **crf_kwargs(cfg)
    )


@dataclass
class SegmentationStage:
    """Everything learned by the segmentation half of training."""

    resized: list
    fmaps: list
    prototypes: ComponentPrototypes
    kept_ids: list
    noise_ids: list
    background_ids: list
    fields: list  # per-image (H, W, K) memberships


def fit_segmentation(images, image_ids, cfg) -> SegmentationStage:
    """coreset -> memory bank -> kmeans -> reference-image component filter."""
    cfg = validate_config(cfg)
    images, image_ids = list(images), list(image_ids)
    if len(images) == 0:
        raise TrainingError("training dataset is empty")
    if len(images) != len(image_ids):
        raise ParameterError("images and image_ids must have equal length")

    size = int(get_dotted(cfg, "pipeline.input_size"))
    seed = int(get_dotted(cfg, "pipeline.seed", 0))
    resized = [resize_image(im, size) for im in images]
    extractor = make_extractor(cfg)
    fmaps = [feature_map_for(extractor, im, iid) for im, iid in zip(resized, image_ids)]

    ratio = get_dotted(cfg, "features.coreset_ratio")
    bank = build_memory_bank([coreset_sample(fm, ratio, seed=seed) for fm in fmaps])
    protos = kmeans(bank, k=int(get_dotted(cfg, "segmentation.k")), seed=seed)

    fields = [segment_with_config(fm, im, protos, cfg) for fm, im in zip(fmaps, resized)]

    ref = get_dotted(cfg, "filter.reference_image")
    if ref is None:
        ref_idx = 0
    elif ref in image_ids:
        ref_idx = image_ids.index(ref)
    else:
        ref_idx = int(ref)
    reserved = select_core_components(
        fields[ref_idx],
        noise_threshold=get_dotted(cfg, "filter.noise_max_threshold"),
        corner_window=get_dotted(cfg, "filter.corner_window"),
    )
    return SegmentationStage(
        resized=resized,
        fmaps=fmaps,
        prototypes=protos,
        kept_ids=reserved.kept_ids,
        noise_ids=reserved.dropped_noise,
        background_ids=reserved.dropped_background,
        fields=fields,
    )


def measure_components(seg, img, cfg, kept_ids, scales):
    """Masks, metrological features, and connected regions for one image."""
    method = get_dotted(cfg, "region.method")
    eps = get_dotted(cfg, "metrology.color_eps")
    min_area_frac = get_dotted(cfg, "counting.min_area_frac")
    lab = rgb_to_lab(img)
    feats, masks, regions = {}, {}, {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # degenerate maps yield empty masks by contract
        for k in kept_ids:
            mask = extract_region(
                seg[:, :, k],
                scale=scales.get(k, 1.0),
                method=method,
                all_fields=seg,  # argmax competes against every channel
                component_slot=k,
            )
            masks[k] = mask
            feats[k] = met.component_features(mask, lab, eps=eps)
            regions[k] = cnt.connected_regions(mask, component_id=k, min_area_frac=min_area_frac)
    return feats, masks, regions


def train_from_images(images, image_ids, config) -> ComponentModel:
    """Run the full training pipeline over in-memory images.

    Deterministic given config["pipeline"]["seed"]; the config snapshot is
    stored inside the returned model.
    """
    cfg = validate_config(config)
    if len(list(images)) < 2:
        warnings.warn("training with fewer than 2 images; calibration and kNN degrade")
    stage = fit_segmentation(images, image_ids, cfg)
    kept = stage.kept_ids

    method = get_dotted(cfg, "region.method")
    if method == "adaptive_otsu":
        scales = {
            k: calibrate_scale(
                [s[:, :, k] for s in stage.fields],
                candidates=get_dotted(cfg, "region.candidates"),
                variance=get_dotted(cfg, "region.variance"),
            )
            for k in kept
        }
    else:
        scales = {k: 1.0 for k in kept}

    all_feats, all_regions = [], []
    for seg, im in zip(stage.fields, stage.resized):
        feats, _masks, regions = measure_components(seg, im, cfg, kept, scales)
        all_feats.append(feats)
        all_regions.append(regions)

    feature_set = get_dotted(cfg, "metrology.features")
    norms = met.fit_normalizers(all_feats, kept, feature_set=feature_set)
    vector_bank = np.stack(
        [met.build_global_vector(f, norms, kept, feature_set=feature_set) for f in all_feats]
    )

    group_centroids, hist_bank = {}, {}
    for k in kept:
        pooled = [r.area for regions in all_regions for r in regions[k]]
        groups = cnt.fit_groups(
            pooled,
            eps_frac=get_dotted(cfg, "counting.eps_frac"),
            min_samples=get_dotted(cfg, "counting.min_samples"),
        )
        group_centroids[k] = groups.centroids
        hists = [cnt.count_histogram(regions[k], groups) for regions in all_regions]
        hist_bank[k] = (
            np.stack(hists) if groups.n_groups else np.zeros((len(all_regions), 0))
        )

    model = ComponentModel(
        config=cfg,
        prototypes=stage.prototypes.centers,
        kept_ids=kept,
        noise_ids=stage.noise_ids,
        background_ids=stage.background_ids,
        scales=scales,
        area_means=norms.area_means,
        color_means=norms.color_means,
        n_train=len(stage.resized),
        vector_bank=vector_bank,
        group_centroids=group_centroids,
        hist_bank=hist_bank,
        train_ids=list(image_ids),
    )
    model.train_means = _loo_means(model)
    return model


def train(dataset_dir, config) -> ComponentModel:
    """Train from <dataset_dir>/train/good/*.png (lexicographic order)."""
    paths = training_images(dataset_dir)
    images = [load_image(p) for p in paths]
    ids = [os.path.relpath(p, dataset_dir).replace(os.sep, "/") for p in paths]
    return train_from_images(images, ids, config)


def _counting_ids(kept_ids, cfg):
    if not get_dotted(cfg, "counting.enabled", True):
        return []
    chosen = get_dotted(cfg, "counting.components")
    if chosen is None:
        return list(kept_ids)
    chosen = {int(c) for c in chosen}
    return [k for k in kept_ids if k in chosen]


def _per_component_len(cfg) -> int:
    return 1 if get_dotted(cfg, "metrology.features") == "A" else 2


def _score_vector(model, g, weights_vec, exclude=None):
    k = int(get_dotted(model.config, "metrology.k"))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        idx, dists = met.knn_neighbors(
            g,
            model.vector_bank,
            k=k,
            weights=weights_vec,
            per_component=_per_component_len(model.config),
            exclude=exclude,
        )
    return float(dists.mean()), idx


def _score_histograms(model, hists, exclude=None):
    cfg = model.config
    k = int(get_dotted(cfg, "counting.k"))
    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for comp in _counting_ids(model.kept_ids, cfg):
            bank = model.hist_bank.get(comp)
            if bank is None or bank.shape[1] == 0:
                continue
            total += cnt.counting_score(hists[comp], bank, k=k, exclude=exclude)
    return total


def _loo_means(model) -> dict:
    """Leave-one-out D_G/D_H/D means over the training bank (for ensembling)."""
    alpha = float(get_dotted(model.config, "detector.alpha"))
    n = model.vector_bank.shape[0]
    dgs, dhs = [], []
    for i in range(n):
        exclude = i if n > 1 else None  # a singleton bank scores against itself
        dg, _ = _score_vector(model, model.vector_bank[i], None, exclude=exclude)
        hists = {k: model.hist_bank[k][i] for k in model.kept_ids if model.hist_bank[k].shape[1]}
        dh = _score_histograms(model, hists, exclude=exclude)
        dgs.append(dg)
        dhs.append(dh)
    d = [g + alpha * h for g, h in zip(dgs, dhs)]
    return {
        "d_g": float(np.mean(dgs)) if dgs else 0.0,
        "d_h": float(np.mean(dhs)) if dhs else 0.0,
        "d": float(np.mean(d)) if d else 0.0,
    }


def training_self_scores(model) -> np.ndarray:
    """Leave-one-out fused scores of the training images."""
    alpha = float(get_dotted(model.config, "detector.alpha"))
    n = model.vector_bank.shape[0]
    out = []
    for i in range(n):
        exclude = i if n > 1 else None
        dg, _ = _score_vector(model, model.vector_bank[i], None, exclude=exclude)
        hists = {k: model.hist_bank[k][i] for k in model.kept_ids if model.hist_bank[k].shape[1]}
        out.append(dg + alpha * _score_histograms(model, hists, exclude=exclude))
    return np.array(out)


def score_image(img, model: ComponentModel, policy: PolicyConfig | None = None, image_id: str = "") -> AnomalyReport:
    """Segment, measure, and score one image against the trained banks."""
    policy = (policy or PolicyConfig()).validate()
    cfg = model.config
    size = int(get_dotted(cfg, "pipeline.input_size"))
    resized = resize_image(img, size)
    extractor = make_extractor(cfg)
    fmap = feature_map_for(extractor, resized, image_id)
    protos = ComponentPrototypes(centers=model.prototypes)
    seg = segment_with_config(fmap, resized, protos, cfg)
    feats, _masks, regions = measure_components(seg, resized, cfg, model.kept_ids, model.scales)

    norms = met.Normalizers(model.area_means, model.color_means, model.n_train)
    feature_set = get_dotted(cfg, "metrology.features")
    g = met.build_global_vector(feats, norms, model.kept_ids, feature_set=feature_set)

    weights_vec = np.array([policy.weight_for(k) for k in model.kept_ids])
    d_g, nn_idx = _score_vector(model, g, weights_vec)
    attributions = met.attribute(
        g,
        model.vector_bank[nn_idx],
        model.kept_ids,
        weights=weights_vec,
        per_component=_per_component_len(cfg),
    )

    hists = {}
    for k in model.kept_ids:
        groups = cnt.AreaGroups(centroids=np.asarray(model.group_centroids.get(k, [])))
        hists[k] = cnt.count_histogram(regions[k], groups)
    d_h = _score_histograms(model, hists)

    alpha = float(get_dotted(cfg, "detector.alpha"))
    d = d_g + alpha * d_h

    contrib_over = any(v > policy.threshold_for(k) for k, v in attributions)
    decision = "anomalous" if (d > policy.global_threshold or contrib_over) else "normal"

    summaries = []
    for k in model.kept_ids:
        entry = {
            "component": int(k),
            "area": feats[k].area,
            "area_norm": feats[k].area / model.area_means[k],
            "regions": len(regions[k]),
            "empty": bool(feats[k].empty),
        }
        if feature_set == "A+Co":
            entry["color"] = feats[k].color
            entry["color_norm"] = feats[k].color / model.color_means[k]
        summaries.append(entry)

    return AnomalyReport(
        image_id=image_id,
        d_g=d_g,
        d_h=d_h,
        d=d,
        alpha=alpha,
        attributions=attributions,
        components=summaries,
        decision=decision,
    )


def segment_only(img, model: ComponentModel, image_id: str = ""):
    """Segmentation field and per-component masks at the model's input size."""
    cfg = model.config
    size = int(get_dotted(cfg, "pipeline.input_size"))
    resized = resize_image(img, size)
    extractor = make_extractor(cfg)
    fmap = feature_map_for(extractor, resized, image_id)
    protos = ComponentPrototypes(centers=model.prototypes)
    seg = segment_with_config(fmap, resized, protos, cfg)
    _feats, masks, _regions = measure_components(seg, resized, cfg, model.kept_ids, model.scales)
    return seg, masks, resized


def ensemble_score(
    d: float,
    external: float,
    mode: str = "add",
    d_train_mean: float | None = None,
    external_train_mean: float | None = None,
) -> float:
    """Fuse our score with an external detector's: plain or mean-normalized add."""
    if not math.isfinite(external):
        raise ParameterError(f"external score must be finite, got {external}")
    if mode == "add":
        return float(d + external)
    if mode == "normalized_add":
        if not d_train_mean or not external_train_mean:
            raise ParameterError("normalized_add needs both training-set means")
        return float(d / d_train_mean + external / external_train_mean)
    raise ParameterError(f"unknown ensemble mode {mode!r}")


def classify_anomaly(anomaly_map, seg, model: ComponentModel, policy: PolicyConfig | None = None):
    """Assign an external anomaly map's peak to a kept component or background.

    Returns (label, masked_peak_score). Background peaks score 0 when the
    policy ignores background.
    """
    policy = policy or PolicyConfig()
    amap = np.asarray(anomaly_map, dtype=np.float64)
    seg = np.asarray(seg, dtype=np.float64)
    if amap.shape != seg.shape[:2]:
        raise ParameterError(f"anomaly map {amap.shape} does not match field {seg.shape[:2]}")
    peak_flat = int(np.argmax(amap))
    py, px = np.unravel_index(peak_flat, amap.shape)
    winner = int(np.argmax(seg[py, px]))
    peak = float(amap[py, px])
    if winner in model.kept_ids:
        return winner, peak
    return "background", 0.0 if policy.ignore_background else peak
