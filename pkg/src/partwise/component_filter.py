"""Noise / background component filtering from a single training segmentation.

A component map is noise when even its smoothed peak stays low, and background
when its binarized region claims most image corners. Both checks run once on
one training image; the surviving ("kept") ids are frozen into the model.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateFieldError, TrainingError
from .imops import mean_filter
from .regions import otsu


@dataclass(frozen=True)
class ReservedComponents:
    kept_ids: list = field(default_factory=list)
    dropped_noise: list = field(default_factory=list)
    dropped_background: list = field(default_factory=list)


def detect_noise(seg, filter_size: int = 11, threshold: float = 0.5) -> set:
    """Ids whose mean-filtered membership map never reaches the threshold."""
    seg = np.asarray(seg, dtype=np.float64)
    noisy = set()
    for k in range(seg.shape[2]):
        if mean_filter(seg[:, :, k], filter_size).max() < threshold:
            noisy.add(k)
    return noisy


def _corner_windows(h, w, win):
    return [
        (slice(0, win), slice(0, win)),
        (slice(0, win), slice(w - win, w)),
        (slice(h - win, h), slice(0, win)),
        (slice(h - win, h), slice(w - win, w)),
    ]


def detect_background(seg, skip_ids=(), corner_window: int = 5) -> set:
    """Ids whose OTSU foreground covers more than two of the image corners.

    A corner counts as covered when more than half of its corner_window x
    corner_window pixels are foreground. Channels in skip_ids (already ruled
    noise) are not examined; degenerate channels cannot be binarized and are
    left alone with a warning.
    """
    seg = np.asarray(seg, dtype=np.float64)
    h, w = seg.shape[:2]
    win = min(int(corner_window), h, w)
    half = (win * win) / 2.0
    background = set()
    for k in range(seg.shape[2]):
        if k in skip_ids:
            continue
        channel = seg[:, :, k]
        try:
            tau = otsu(channel)
        except DegenerateFieldError:
            warnings.warn(f"component {k}: constant map, background test skipped")
            continue
        fg = channel >= tau
        covered = sum(1 for sl in _corner_windows(h, w, win) if fg[sl].sum() > half)
        if covered >= 3:
            background.add(k)
    return background


def select_core_components(
    seg,
    filter_size: int = 11,
    noise_threshold: float = 0.5,
    corner_window: int = 5,
) -> ReservedComponents:
    """Partition component ids of one training image into kept/noise/background."""
    seg = np.asarray(seg, dtype=np.float64)
    total = seg.shape[2]
    noise = detect_noise(seg, filter_size, noise_threshold)
    background = detect_background(seg, skip_ids=noise, corner_window=corner_window)
    kept = [k for k in range(total) if k not in noise and k not in background]
    if not kept:
        reasons = []
        for k in range(total):
            if k in noise:
                reasons.append(f"{k}: noise (filtered max < {noise_threshold})")
            elif k in background:
                reasons.append(f"{k}: background (corner rule)")
        raise TrainingError(
            "all components were filtered out; per-component reasons: " + "; ".join(reasons)
        )
    return ReservedComponents(
        kept_ids=kept,
        dropped_noise=sorted(noise),
        dropped_background=sorted(background),
    )
