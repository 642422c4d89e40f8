"""Per-component area/color features, mean normalization, and kNN scoring.

Area is the region pixel count. Color is the region mean of b/a in CIELAB
(L dropped to stay lighting-invariant), with a signed epsilon clamp on `a`
to keep near-gray regions finite. Features are normalized by their training
means (no z-score, no min-max), interleaved into a global vector per image,
and scored by the average Euclidean distance to the k nearest training
vectors.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import ParameterError, TrainingError

FEATURE_SETS = ("A", "A+Co")


@dataclass(frozen=True)
class ComponentFeatures:
    area: float
    color: float
    empty: bool = False


@dataclass(frozen=True)
class Normalizers:
    area_means: dict
    color_means: dict
    n_train: int


def clamp_signed(a, eps: float):
    """Push values in (-eps, eps) out to +/-eps, treating 0 as positive."""
    a = np.asarray(a, dtype=np.float64)
    return np.where(a >= 0, np.maximum(a, eps), np.minimum(a, -eps))


def component_features(mask, lab, eps: float = 1e-3) -> ComponentFeatures:
    """Area and mean b/a color of one region; empty masks yield (0, 0, empty)."""
    mask = np.asarray(mask)
    lab = np.asarray(lab, dtype=np.float64)
    if mask.shape != lab.shape[:2]:
        raise ParameterError(f"mask {mask.shape} does not match image {lab.shape[:2]}")
    sel = mask.astype(bool)
    area = float(sel.sum())
    if area == 0:
        return ComponentFeatures(area=0.0, color=0.0, empty=True)
    a = clamp_signed(lab[..., 1][sel], eps)
    b = lab[..., 2][sel]
    return ComponentFeatures(area=area, color=float(np.mean(b / a)))


def fit_normalizers(train_features, kept_ids, feature_set: str = "A+Co") -> Normalizers:
    """Training means per kept component. `train_features` maps image index ->
    {component id -> ComponentFeatures}."""
    if feature_set not in FEATURE_SETS:
        raise ParameterError(f"feature set must be one of {FEATURE_SETS}")
    n_train = len(train_features)
    if n_train < 1:
        raise TrainingError("need at least one training image to fit normalizers")
    area_means, color_means = {}, {}
    for k in kept_ids:
        areas = np.array([feats[k].area for feats in train_features])
        mean_a = float(areas.mean())
        if mean_a <= 0:
            raise TrainingError(
                f"component {k} never appears in training regions (zero mean area)"
            )
        area_means[k] = mean_a
        if feature_set == "A+Co":
            colors = np.array([feats[k].color for feats in train_features])
            mean_c = float(colors.mean())
            if abs(mean_c) < 1e-12:
                raise TrainingError(
                    f"component {k} has a zero-mean color feature; "
                    "mean normalization is undefined (component is gray on average)"
                )
            color_means[k] = mean_c
    return Normalizers(area_means=area_means, color_means=color_means, n_train=n_train)


def build_global_vector(features, norms: Normalizers, kept_ids, feature_set: str = "A+Co") -> np.ndarray:
    """Interleaved (area', color') per kept component, in recorded kept order."""
    if feature_set not in FEATURE_SETS:
        raise ParameterError(f"feature set must be one of {FEATURE_SETS}")
    out = []
    for k in kept_ids:
        if k not in features:
            raise ParameterError(f"missing features for component {k}")
        out.append(features[k].area / norms.area_means[k])
        if feature_set == "A+Co":
            out.append(features[k].color / norms.color_means[k])
    return np.array(out, dtype=np.float64)


def _weighted_sq_deviations(g, others, weights, per_component: int):
    """Squared deviations summed within each component block, weighted."""
    d2 = (others - g[None, :]) ** 2
    blocks = d2.reshape(others.shape[0], -1, per_component).sum(axis=2)
    if weights is not None:
        blocks = blocks * np.asarray(weights, dtype=np.float64)[None, :]
    return blocks


def knn_neighbors(g, bank, k: int = 5, weights=None, per_component: int = 2, exclude: int | None = None):
    """Indices of the k nearest bank rows under the (optionally weighted) metric."""
    bank = np.asarray(bank, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if bank.ndim != 2 or bank.shape[1] != g.shape[0]:
        raise ParameterError(f"bank shape {bank.shape} incompatible with vector {g.shape}")
    rows = np.arange(bank.shape[0])
    if exclude is not None:
        rows = rows[rows != exclude]
    if len(rows) == 0:
        raise ParameterError("vector bank is empty")
    k_eff = k
    if len(rows) < k:
        warnings.warn(f"bank holds {len(rows)} vectors < k={k}; using k={len(rows)}")
        k_eff = len(rows)
    d2 = _weighted_sq_deviations(g, bank[rows], weights, per_component).sum(axis=1)
    order = np.argsort(d2, kind="stable")[:k_eff]
    return rows[order], np.sqrt(np.maximum(d2[order], 0.0))


def knn_score(
    g,
    bank,
    k: int = 5,
    weights=None,
    per_component: int = 2,
    exclude: int | None = None,
) -> float:
    """Average distance to the k nearest training vectors (exact search)."""
    _, dists = knn_neighbors(g, bank, k=k, weights=weights, per_component=per_component, exclude=exclude)
    return float(dists.mean())


def attribute(g, neighbors, kept_ids, weights=None, per_component: int = 2):
    """Per-component contributions to the deviation from the neighbor mean.

    contribution_k = sqrt(w_k * sum of squared deviations of component k's
    entries); the squared contributions sum exactly to the (weighted) squared
    distance between g and the neighbor mean. Returned sorted descending.
    """
    neighbors = np.asarray(neighbors, dtype=np.float64)
    center = neighbors.mean(axis=0)
    blocks = _weighted_sq_deviations(np.asarray(g, dtype=np.float64), center[None, :], weights, per_component)[0]
    contribs = np.sqrt(np.maximum(blocks, 0.0))
    ranked = sorted(zip(kept_ids, contribs.tolist()), key=lambda t: -t[1])
    return ranked
