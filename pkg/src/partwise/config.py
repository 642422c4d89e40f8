"""Run configuration: defaults, config-file merging, and dotted-key access."""

import copy
import json

from .exceptions import DataError, ParameterError

DEFAULTS = {
    "pipeline": {"input_size": 224, "seed": 0},
    "features": {"extractor": "mock", "dir": None, "stride": 8, "coreset_ratio": 0.01},
    "segmentation": {
        "k": 5,
        "temperature": 0.1,
        "crf": {
            "enabled": True,
            "a": 4.0,
            "b": 3.0,
            "theta_alpha": 67.0,
            "theta_beta": 3.0,
            "theta_gamma": 1.0,
            "iterations": 2,
            "mode": "subsampled",
            "sample_frac": 0.05,
            "sample_min": 512,
        },
    },
    "filter": {"corner_window": 5, "noise_max_threshold": 0.5, "reference_image": None},
    "region": {
        "method": "adaptive_otsu",
        "candidates": [1.0, 1.1, 1.2, 1.3, 1.4],
        "variance": "relative",
    },
    "metrology": {"k": 5, "color_eps": 1e-3, "features": "A+Co"},
    "counting": {
        "enabled": True,
        "components": None,
        "min_area_frac": 0.001,
        "eps_frac": 0.10,
        "min_samples": 10,
        "k": 5,
    },
    "detector": {"alpha": 0.5},
}

_CHOICES = {
    "features.extractor": ("mock", "file"),
    "segmentation.crf.mode": ("exact", "subsampled"),
    "region.method": ("adaptive_otsu", "otsu", "argmax"),
    "region.variance": ("relative", "raw"),
    "metrology.features": ("A", "A+Co"),
}


def default_config() -> dict:
    return copy.deepcopy(DEFAULTS)


def set_dotted(cfg: dict, key: str, value) -> None:
    parts = key.split(".")
    node = cfg
    for p in parts[:-1]:
        node = node.setdefault(p, {})
    node[parts[-1]] = value


def get_dotted(cfg: dict, key: str, default=None):
    node = cfg
    for p in key.split("."):
        if not isinstance(node, dict) or p not in node:
            return default
        node = node[p]
    return node


def merge_config(base: dict, overrides: dict) -> dict:
    """Deep-merge `overrides` into a copy of `base`. Dotted keys are expanded."""
    out = copy.deepcopy(base)

    def apply(node: dict, prefix: str, src: dict):
        for key, value in src.items():
            if "." in key:
                set_dotted(node, key, copy.deepcopy(value))
            elif isinstance(value, dict) and isinstance(node.get(key), dict):
                apply(node[key], f"{prefix}{key}.", value)
            else:
                node[key] = copy.deepcopy(value)

    apply(out, "", overrides or {})
    return out


def validate_config(cfg: dict) -> dict:
    for key, choices in _CHOICES.items():
        val = get_dotted(cfg, key)
        if val not in choices:
            raise ParameterError(f"config {key} must be one of {choices}, got {val!r}")
    if get_dotted(cfg, "pipeline.input_size", 0) < 16:
        raise ParameterError("pipeline.input_size must be >= 16")
    if not 0 < get_dotted(cfg, "features.coreset_ratio", 0) <= 1:
        raise ParameterError("features.coreset_ratio must be in (0, 1]")
    if get_dotted(cfg, "segmentation.k", 0) < 2:
        raise ParameterError("segmentation.k must be >= 2")
    return cfg


def load_config_file(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise DataError(f"config file {path} must hold a JSON object")
    return data


def resolve_config(config_file=None, overrides=None) -> dict:
    """defaults -> config file -> explicit overrides, then validated."""
    cfg = default_config()
    if config_file:
        cfg = merge_config(cfg, load_config_file(config_file))
    if overrides:
        cfg = merge_config(cfg, overrides)
    return validate_config(cfg)
