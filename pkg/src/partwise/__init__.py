"""partwise: component-aware logical anomaly detection for product images."""

from .color import rgb_to_lab
from .config import default_config, merge_config, resolve_config
from .crf import CrfParams, crf_refine
from .detector import (
    AnomalyReport,
    classify_anomaly,
    ensemble_score,
    score_image,
    train,
    train_from_images,
)
from .estimator import ComponentAnomalyDetector, ComponentSegmenter
from .evaluation import auroc, run_benchmark
from .exceptions import (
    DataError,
    DegenerateFieldError,
    FeatureFileError,
    ModelFormatError,
    ParameterError,
    PartwiseError,
    TrainingError,
)
from .featfile import read_feature_file, write_feature_file
from .features import MemoryBank, build_memory_bank, coreset_sample, mock_extract
from .imops import bilinear_resize, mean_filter
from .model import ComponentModel, load_model, save_model
from .policy import PolicyConfig, load_policy, save_policy
from .regions import calibrate_scale, extract_region, otsu
from .segmentation import assign_soft, kmeans, segment_image

__version__ = "0.1.0"

__all__ = [
    "AnomalyReport",
    "ComponentAnomalyDetector",
    "ComponentModel",
    "ComponentSegmenter",
    "CrfParams",
    "DataError",
    "DegenerateFieldError",
    "FeatureFileError",
    "MemoryBank",
    "ModelFormatError",
    "ParameterError",
    "PartwiseError",
    "PolicyConfig",
    "TrainingError",
    "assign_soft",
    "auroc",
    "bilinear_resize",
    "build_memory_bank",
    "calibrate_scale",
    "classify_anomaly",
    "coreset_sample",
    "crf_refine",
    "default_config",
    "ensemble_score",
    "extract_region",
    "kmeans",
    "load_model",
    "load_policy",
    "mean_filter",
    "merge_config",
    "mock_extract",
    "otsu",
    "read_feature_file",
    "resolve_config",
    "rgb_to_lab",
    "run_benchmark",
    "save_model",
    "save_policy",
    "score_image",
    "segment_image",
    "train",
    "train_from_images",
    "write_feature_file",
]
