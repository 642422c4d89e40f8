"""Instance counting from region connectivity.

Connected regions of each component mask are grouped by area with a 1-D
DBSCAN fitted on the training set; per-image counts over those groups form a
histogram whose regularized form is compared against the training bank with
kNN distances.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .exceptions import ParameterError

_EIGHT = np.ones((3, 3), dtype=np.int8)


@dataclass(frozen=True)
class ConnectedRegion:
    area: int
    bbox: tuple  # (row0, col0, row1, col1), half-open
    component_id: int = -1


@dataclass(frozen=True)
class AreaGroups:
    centroids: np.ndarray  # sorted ascending; may be empty

    @property
    def n_groups(self) -> int:
        return len(self.centroids)


def connected_regions(mask, component_id: int = -1, min_area_frac: float = 0.001):
    """8-connected regions of a binary mask, dropping tiny noise regions.

    Regions smaller than min_area_frac of the image area are discarded.
    """
    mask = np.asarray(mask).astype(bool)
    if mask.ndim != 2:
        raise ParameterError(f"mask must be 2-D, got shape {mask.shape}")
    labels, n = ndimage.label(mask, structure=_EIGHT)
    if n == 0:
        return []
    min_area = min_area_frac * mask.shape[0] * mask.shape[1]
    areas = ndimage.sum_labels(np.ones_like(labels), labels, index=np.arange(1, n + 1))
    slices = ndimage.find_objects(labels)
    out = []
    for idx in range(n):
        area = float(areas[idx])
        if area < min_area:
            continue
        sl = slices[idx]
        out.append(
            ConnectedRegion(
                area=int(area),
                bbox=(sl[0].start, sl[1].start, sl[0].stop, sl[1].stop),
                component_id=component_id,
            )
        )
    return out


def dbscan_1d(values, eps: float, min_samples: int):
    """DBSCAN on scalars. Returns labels aligned with `values` (-1 = noise).

    Neighborhoods are closed balls |x - y| <= eps and min_samples counts the
    point itself. Values are scanned in sorted order, so clusters are
    intervals and the labeling does not depend on input order.
    """
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    labels = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return labels
    order = np.argsort(values, kind="stable")
    sv = values[order]
    # neighbor count via two-pointer over the sorted array
    left = np.searchsorted(sv, sv - eps, side="left")
    right = np.searchsorted(sv, sv + eps, side="right")
    core = (right - left) >= min_samples

    cluster = -1
    sorted_labels = np.full(n, -1, dtype=np.int64)
    i = 0
    while i < n:
        if not core[i] or sorted_labels[i] != -1:
            i += 1
            continue
        cluster += 1
        # expand: cores chain while consecutive cores are within eps;
        # border points attach to the cluster that reaches them first.
        seeds = [i]
        sorted_labels[i] = cluster
        while seeds:
            j = seeds.pop()
            if not core[j]:
                continue
            for nb in range(left[j], right[j]):
                if sorted_labels[nb] == -1:
                    sorted_labels[nb] = cluster
                    seeds.append(nb)
        i += 1
    labels[order] = sorted_labels
    return labels


def fit_groups(areas, eps_frac: float = 0.10, min_samples: int = 10) -> AreaGroups:
    """Group pooled training region areas; eps = eps_frac * mean(areas).

    DBSCAN noise points do not define groups. No regions at all (or all
    noise) yields zero groups and the component is skipped when scoring.
    """
    areas = np.asarray([float(a) for a in areas], dtype=np.float64)
    if len(areas) == 0:
        return AreaGroups(centroids=np.array([]))
    eps = eps_frac * float(areas.mean())
    labels = dbscan_1d(areas, eps=eps, min_samples=min_samples)
    centroids = [areas[labels == c].mean() for c in range(labels.max() + 1)]
    return AreaGroups(centroids=np.array(sorted(centroids)))


def count_histogram(regions, groups: AreaGroups, regularize: bool = True) -> np.ndarray:
    """Counts per area group for one image's regions; ties go to the smaller
    centroid. Regularized by the group count per Eq.-style normalization."""
    n = groups.n_groups
    if n == 0:
        return np.array([], dtype=np.float64)
    hist = np.zeros(n, dtype=np.float64)
    for region in regions:
        area = region.area if hasattr(region, "area") else float(region)
        idx = int(np.argmin(np.abs(groups.centroids - float(area))))
        hist[idx] += 1.0
    return hist / n if regularize else hist


def counting_score(hist, bank, k: int = 5, exclude: int | None = None) -> float:
    """Average L2 distance of one component's histogram to its k nearest
    training histograms. Empty histograms (no groups) contribute 0."""
    hist = np.asarray(hist, dtype=np.float64)
    bank = np.asarray(bank, dtype=np.float64)
    if hist.size == 0 or bank.size == 0:
        return 0.0
    rows = np.arange(bank.shape[0])
    if exclude is not None:
        rows = rows[rows != exclude]
    if len(rows) == 0:
        return 0.0
    k_eff = k
    if len(rows) < k:
        warnings.warn(f"histogram bank holds {len(rows)} rows < k={k}; using k={len(rows)}")
        k_eff = len(rows)
    d = np.linalg.norm(bank[rows] - hist[None, :], axis=1)
    nearest = np.sort(d, kind="stable")[:k_eff]
    return float(nearest.mean())
