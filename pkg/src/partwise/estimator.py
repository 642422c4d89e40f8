"""scikit-learn style estimators wrapping the functional pipeline.

ComponentSegmenter is a fit/transform transformer producing per-pixel
component memberships; ComponentAnomalyDetector is the end-to-end fit/score
detector. Both expose their configuration through get_params/set_params so
they compose with the wider ecosystem (grid search, pipelines, cloning).
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from . import detector as det
from .config import default_config, get_dotted, merge_config, validate_config
from .dataset import load_image, training_images
from .exceptions import ParameterError
from .model import ComponentModel, load_model, save_model
from .policy import PolicyConfig
from .segmentation import ComponentPrototypes
from .validation import check_image

_PARAM_TO_KEY = {
    "input_size": "pipeline.input_size",
    "seed": "pipeline.seed",
    "extractor": "features.extractor",
    "features_dir": "features.dir",
    "stride": "features.stride",
    "coreset_ratio": "features.coreset_ratio",
    "n_clusters": "segmentation.k",
    "temperature": "segmentation.temperature",
    "crf_enabled": "segmentation.crf.enabled",
    "crf_a": "segmentation.crf.a",
    "crf_b": "segmentation.crf.b",
    "crf_theta_alpha": "segmentation.crf.theta_alpha",
    "crf_theta_beta": "segmentation.crf.theta_beta",
    "crf_theta_gamma": "segmentation.crf.theta_gamma",
    "crf_iterations": "segmentation.crf.iterations",
    "crf_mode": "segmentation.crf.mode",
    "crf_sample_frac": "segmentation.crf.sample_frac",
    "crf_sample_min": "segmentation.crf.sample_min",
    "corner_window": "filter.corner_window",
    "noise_threshold": "filter.noise_max_threshold",
    "reference_image": "filter.reference_image",
    "region_method": "region.method",
    "scale_candidates": "region.candidates",
    "variance_mode": "region.variance",
    "knn_k": "metrology.k",
    "color_eps": "metrology.color_eps",
    "feature_set": "metrology.features",
    "counting_enabled": "counting.enabled",
    "counting_components": "counting.components",
    "counting_min_area_frac": "counting.min_area_frac",
    "counting_eps_frac": "counting.eps_frac",
    "counting_min_samples": "counting.min_samples",
    "counting_k": "counting.k",
    "alpha": "detector.alpha",
}


def params_to_config(params: dict) -> dict:
    overrides = {}
    for name, value in params.items():
        key = _PARAM_TO_KEY.get(name)
        if key is None:
            raise ParameterError(f"unknown parameter {name!r}")
        if isinstance(value, tuple):
            value = list(value)
        overrides[key] = value
    return validate_config(merge_config(default_config(), overrides))


def config_to_params(cfg: dict) -> dict:
    return {name: get_dotted(cfg, key) for name, key in _PARAM_TO_KEY.items()}


def _coerce_inputs(X):
    """Accept a dataset directory, a single image, or a sequence of images."""
    if isinstance(X, str):
        paths = training_images(X)
        import os

        ids = [os.path.relpath(p, X).replace(os.sep, "/") for p in paths]
        return [load_image(p) for p in paths], ids
    arr = np.asarray(X) if not isinstance(X, (list, tuple)) else None
    if arr is not None and arr.ndim == 3:
        return [check_image(arr)], ["image_0"]
    images = [check_image(im) for im in X]
    return images, [f"image_{i}" for i in range(len(images))]


class ComponentSegmenter(BaseEstimator, TransformerMixin):
    """Discover product components from normal images and segment new ones.

    fit() learns K component prototypes by clustering coreset-sampled dense
    features and freezes the kept/noise/background split from one reference
    image. transform() returns per-pixel membership fields of shape
    (n_images, input_size, input_size, K).
    """

    def __init__(
        self,
        input_size=224,
        extractor="mock",
        features_dir=None,
        stride=8,
        coreset_ratio=0.01,
        n_clusters=5,
        temperature=0.1,
        crf_enabled=True,
        crf_a=4.0,
        crf_b=3.0,
        crf_theta_alpha=67.0,
        crf_theta_beta=3.0,
        crf_theta_gamma=1.0,
        crf_iterations=2,
        crf_mode="subsampled",
        crf_sample_frac=0.05,
        crf_sample_min=512,
        corner_window=5,
        noise_threshold=0.5,
        reference_image=None,
        seed=0,
    ):
        self.input_size = input_size
        self.extractor = extractor
        self.features_dir = features_dir
        self.stride = stride
        self.coreset_ratio = coreset_ratio
        self.n_clusters = n_clusters
        self.temperature = temperature
        self.crf_enabled = crf_enabled
        self.crf_a = crf_a
        self.crf_b = crf_b
        self.crf_theta_alpha = crf_theta_alpha
        self.crf_theta_beta = crf_theta_beta
        self.crf_theta_gamma = crf_theta_gamma
        self.crf_iterations = crf_iterations
        self.crf_mode = crf_mode
        self.crf_sample_frac = crf_sample_frac
        self.crf_sample_min = crf_sample_min
        self.corner_window = corner_window
        self.noise_threshold = noise_threshold
        self.reference_image = reference_image
        self.seed = seed

    def _config(self):
        return params_to_config(self.get_params())

    def fit(self, X, y=None):
        images, ids = _coerce_inputs(X)
        cfg = self._config()
        stage = det.fit_segmentation(images, ids, cfg)
        self.config_ = cfg
        self.prototypes_ = stage.prototypes.centers
        self.kept_ids_ = list(stage.kept_ids)
        self.noise_ids_ = list(stage.noise_ids)
        self.background_ids_ = list(stage.background_ids)
        return self

    def transform(self, X):
        if not hasattr(self, "prototypes_"):
            raise ParameterError("ComponentSegmenter is not fitted")
        images, ids = _coerce_inputs(X)
        protos = ComponentPrototypes(centers=self.prototypes_)
        extractor = det.make_extractor(self.config_)
        size = int(self.config_["pipeline"]["input_size"])
        fields = []
        for im, iid in zip(images, ids):
            resized = det.resize_image(im, size)
            fmap = det.feature_map_for(extractor, resized, iid)
            fields.append(det.segment_with_config(fmap, resized, protos, self.config_))
        return np.stack(fields)


class ComponentAnomalyDetector(BaseEstimator):
    """Component-aware logical anomaly detector (fit on normal images only).

    decision_scores(X) returns the fused anomaly score D = D_G + alpha * D_H
    (higher means more anomalous); score_samples(X) returns -D to match the
    scikit-learn outlier convention; predict(X) applies the decision policy
    and returns 1 for anomalous, 0 for normal.
    """

    def __init__(
        self,
        input_size=224,
        extractor="mock",
        features_dir=None,
        stride=8,
        coreset_ratio=0.01,
        n_clusters=5,
        temperature=0.1,
        crf_enabled=True,
        crf_a=4.0,
        crf_b=3.0,
        crf_theta_alpha=67.0,
        crf_theta_beta=3.0,
        crf_theta_gamma=1.0,
        crf_iterations=2,
        crf_mode="subsampled",
        crf_sample_frac=0.05,
        crf_sample_min=512,
        corner_window=5,
        noise_threshold=0.5,
        reference_image=None,
        seed=0,
        region_method="adaptive_otsu",
        scale_candidates=(1.0, 1.1, 1.2, 1.3, 1.4),
        variance_mode="relative",
        knn_k=5,
        color_eps=1e-3,
        feature_set="A+Co",
        counting_enabled=True,
        counting_components=None,
        counting_min_area_frac=0.001,
        counting_eps_frac=0.10,
        counting_min_samples=10,
        counting_k=5,
        alpha=0.5,
    ):
        self.input_size = input_size
        self.extractor = extractor
        self.features_dir = features_dir
        self.stride = stride
        self.coreset_ratio = coreset_ratio
        self.n_clusters = n_clusters
        self.temperature = temperature
        self.crf_enabled = crf_enabled
        self.crf_a = crf_a
        self.crf_b = crf_b
        self.crf_theta_alpha = crf_theta_alpha
        self.crf_theta_beta = crf_theta_beta
        self.crf_theta_gamma = crf_theta_gamma
        self.crf_iterations = crf_iterations
        self.crf_mode = crf_mode
        self.crf_sample_frac = crf_sample_frac
        self.crf_sample_min = crf_sample_min
        self.corner_window = corner_window
        self.noise_threshold = noise_threshold
        self.reference_image = reference_image
        self.seed = seed
        self.region_method = region_method
        self.scale_candidates = scale_candidates
        self.variance_mode = variance_mode
        self.knn_k = knn_k
        self.color_eps = color_eps
        self.feature_set = feature_set
        self.counting_enabled = counting_enabled
        self.counting_components = counting_components
        self.counting_min_area_frac = counting_min_area_frac
        self.counting_eps_frac = counting_eps_frac
        self.counting_min_samples = counting_min_samples
        self.counting_k = counting_k
        self.alpha = alpha

    def _config(self):
        return params_to_config(self.get_params())

    def fit(self, X, y=None):
        images, ids = _coerce_inputs(X)
        self.model_ = det.train_from_images(images, ids, self._config())
        return self

    def _require_fitted(self):
        if not hasattr(self, "model_"):
            raise ParameterError("ComponentAnomalyDetector is not fitted")

    def report(self, image, policy: PolicyConfig | None = None, image_id: str = "") -> det.AnomalyReport:
        self._require_fitted()
        return det.score_image(image, self.model_, policy=policy, image_id=image_id)

    def decision_scores(self, X, policy: PolicyConfig | None = None) -> np.ndarray:
        self._require_fitted()
        images, ids = _coerce_inputs(X)
        return np.array(
            [det.score_image(im, self.model_, policy=policy, image_id=iid).d for im, iid in zip(images, ids)]
        )

    def score_samples(self, X) -> np.ndarray:
        return -self.decision_scores(X)

    def predict(self, X, policy: PolicyConfig | None = None) -> np.ndarray:
        self._require_fitted()
        images, ids = _coerce_inputs(X)
        out = []
        for im, iid in zip(images, ids):
            rep = det.score_image(im, self.model_, policy=policy, image_id=iid)
            out.append(1 if rep.decision == "anomalous" else 0)
        return np.array(out, dtype=np.int64)

    def save(self, path) -> None:
        self._require_fitted()
        save_model(self.model_, path)

    @classmethod
    def from_model(cls, model: ComponentModel) -> "ComponentAnomalyDetector":
        est = cls(**config_to_params(model.config))
        est.model_ = model
        return est

    @classmethod
    def load(cls, path) -> "ComponentAnomalyDetector":
        return cls.from_model(load_model(path))
