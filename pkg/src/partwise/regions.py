"""Region extraction from membership maps: OTSU and the scaled-threshold variant.

Plain OTSU maximizes inter-class variance over a 256-bin quantization of the
map. The adaptive variant multiplies each image's OTSU threshold by a scale
c from a small candidate set and keeps the c whose training-set region areas
are most consistent, which suppresses loose membership noise.
"""

import warnings

import numpy as np

from .exceptions import DegenerateFieldError, ParameterError
from .validation import check_scalar_field

DEFAULT_CANDIDATES = (1.0, 1.1, 1.2, 1.3, 1.4)
_BINS = 256


def otsu(field) -> float:
    """Threshold in [0, 1] maximizing inter-class variance; ties take the lowest."""
    arr = check_scalar_field(field)
    bins = np.minimum((arr * _BINS).astype(np.int64), _BINS - 1)
    hist = np.bincount(bins.ravel(), minlength=_BINS).astype(np.float64)
    if np.count_nonzero(hist) < 2:
        raise DegenerateFieldError("field has fewer than 2 distinct quantized values")

    total = hist.sum()
    centers = (np.arange(_BINS) + 0.5) / _BINS
    w0 = np.cumsum(hist)[:-1]  # mass strictly below threshold t = 1..255
    w1 = total - w0
    m0 = np.cumsum(hist * centers)[:-1]
    mu_total = (hist * centers).sum()
    valid = (w0 > 0) & (w1 > 0)
    mu0 = np.where(valid, m0 / np.maximum(w0, 1), 0.0)
    mu1 = np.where(valid, (mu_total - m0) / np.maximum(w1, 1), 0.0)
    between = np.where(valid, w0 * w1 * (mu0 - mu1) ** 2, -np.inf)
    t = int(np.argmax(between)) + 1  # argmax takes the lowest tied index
    return t / _BINS


def binarize(field, threshold: float) -> np.ndarray:
    arr = np.asarray(field, dtype=np.float64)
    return (arr >= threshold).astype(np.uint8)


def calibrate_scale(
    training_fields,
    candidates=DEFAULT_CANDIDATES,
    variance: str = "relative",
) -> float:
    """Pick the OTSU scale c* whose training-set region areas vary least.

    Each field is binarized at min(c * otsu(field), 1); the score per candidate
    is the area variance ("raw") or variance / mean^2 ("relative", default).
    Ties resolve to the smallest c. Degenerate fields are skipped with a
    warning; if every field is degenerate, calibration fails.
    """
    if variance not in ("relative", "raw"):
        raise ParameterError(f"variance mode must be 'relative' or 'raw', got {variance!r}")
    candidates = sorted(float(c) for c in candidates)
    if not candidates:
        raise ParameterError("candidate set must not be empty")

    taus, fields = [], []
    for f in training_fields:
        arr = np.asarray(f, dtype=np.float64)
        try:
            taus.append(otsu(arr))
        except DegenerateFieldError:
            warnings.warn("skipping degenerate training field during scale calibration")
            continue
        fields.append(arr)
    if not fields:
        raise DegenerateFieldError("all training fields degenerate; cannot calibrate scale")

    best_c, best_score = None, None
    for c in candidates:
        areas = np.array(
            [float(binarize(f, min(c * tau, 1.0)).sum()) for f, tau in zip(fields, taus)]
        )
        var = float(np.var(areas))
        if variance == "relative":
            mean = float(areas.mean())
            score = var / (mean * mean) if mean > 0 else np.inf
        else:
            score = var
        if best_score is None or score < best_score - 1e-15:
            best_c, best_score = c, score
    return float(best_c)


def extract_region(
    field,
    scale: float = 1.0,
    method: str = "adaptive_otsu",
    all_fields=None,
    component_slot: int | None = None,
) -> np.ndarray:
    """Binary region for one component map.

    method="adaptive_otsu": field >= min(scale * otsu(field), 1);
    method="otsu": same with scale 1;
    method="argmax": the pixels where channel `component_slot` wins over every
    channel of `all_fields` (the full (H, W, K) membership stack, dropped
    channels included, so background pixels belong to no kept component).

    At test time a degenerate field yields an empty mask with a warning rather
    than an error, so a single dead component cannot abort scoring.
    """
    if method == "argmax":
        if all_fields is None or component_slot is None:
            raise ParameterError("argmax extraction needs all_fields and component_slot")
        stack = np.asarray(all_fields, dtype=np.float64)
        return (np.argmax(stack, axis=2) == component_slot).astype(np.uint8)
    if method == "otsu":
        scale = 1.0
    elif method != "adaptive_otsu":
        raise ParameterError(f"unknown region extraction method {method!r}")
    arr = np.asarray(field, dtype=np.float64)
    try:
        tau = otsu(arr)
    except DegenerateFieldError:
        warnings.warn("degenerate component map at extraction time; emitting empty mask")
        return np.zeros(arr.shape, dtype=np.uint8)
    return binarize(arr, min(float(scale) * tau, 1.0))
