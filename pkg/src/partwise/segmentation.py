"""Component discovery and per-pixel soft segmentation.

KMeans over the memory bank yields K component prototypes; each patch feature
is turned into membership probabilities via cosine similarity and a softmax,
upsampled to image resolution, and optionally refined with the dense CRF.
"""

from dataclasses import dataclass, field

import numpy as np

from .crf import CrfParams, crf_refine
from .exceptions import ParameterError
from .imops import _interp_axis0
from .validation import check_feature_map

_REASSIGN_EPS = 1e-12


@dataclass(frozen=True)
class ComponentPrototypes:
    centers: np.ndarray  # (K, D)
    inertia: float = 0.0
    n_iter: int = 0
    objective_history: list = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.centers.shape[0]


def _assign_labels(vectors, centers):
    d2 = (
        np.einsum("nd,nd->n", vectors, vectors)[:, None]
        - 2.0 * vectors @ centers.T
        + np.einsum("kd,kd->k", centers, centers)[None, :]
    )
    labels = np.argmin(d2, axis=1)
    return labels, np.maximum(d2[np.arange(len(labels)), labels], 0.0)


def _plus_plus_seed(vectors, k, rng):
    n = vectors.shape[0]
    centers = np.empty((k, vectors.shape[1]))
    centers[0] = vectors[rng.integers(n)]
    diff = vectors - centers[0]
    min_d2 = np.einsum("nd,nd->n", diff, diff)
    for c in range(1, k):
        total = min_d2.sum()
        if total <= _REASSIGN_EPS:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=min_d2 / total)
        centers[c] = vectors[idx]
        diff = vectors - centers[c]
        np.minimum(min_d2, np.einsum("nd,nd->n", diff, diff), out=min_d2)
    return centers


def kmeans(bank, k: int, seed: int = 0, max_iter: int = 300, tol: float = 1e-6) -> ComponentPrototypes:
    """Lloyd's algorithm with k-means++ seeding over the memory bank.

    The within-cluster sum of squared distances is non-increasing across
    iterations; a cluster that empties is reseeded to the point farthest from
    its assigned center. Deterministic for a fixed seed.
    """
    vectors = np.asarray(getattr(bank, "vectors", bank), dtype=np.float64)
    if vectors.ndim != 2:
        raise ParameterError(f"expected (R, D) vectors, got shape {vectors.shape}")
    if k < 2:
        raise ParameterError("component count K must be >= 2")
    if vectors.shape[0] < k:
        raise ParameterError(f"need at least K={k} vectors, got {vectors.shape[0]}")

    rng = np.random.default_rng(seed)
    centers = _plus_plus_seed(vectors, k, rng)
    history = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        labels, d2 = _assign_labels(vectors, centers)
        for c in range(k):
            if not np.any(labels == c):
                far = int(np.argmax(d2))
                centers[c] = vectors[far]
                labels[far] = c
                d2[far] = 0.0
        new_centers = np.stack([vectors[labels == c].mean(axis=0) for c in range(k)])
        shift = float(np.max(np.einsum("kd,kd->k", new_centers - centers, new_centers - centers)))
        centers = new_centers
        _, d2 = _assign_labels(vectors, centers)
        history.append(float(d2.sum()))
        if shift <= tol:
            break
    return ComponentPrototypes(
        centers=centers, inertia=history[-1], n_iter=n_iter, objective_history=history
    )


def assign_soft(fmap, protos: ComponentPrototypes, temperature: float = 0.1) -> np.ndarray:
    """Cosine similarity to each prototype, softmaxed into memberships.

    Returns an (I, J, K) field whose rows sum to 1. A zero-norm feature vector
    has similarity 0 to every prototype and therefore uniform membership.
    """
    arr = check_feature_map(fmap).astype(np.float64)
    centers = np.asarray(protos.centers, dtype=np.float64)
    if arr.shape[2] != centers.shape[1]:
        raise ParameterError(
            f"feature dim {arr.shape[2]} does not match prototype dim {centers.shape[1]}"
        )
    if temperature <= 0:
        raise ParameterError("softmax temperature must be > 0")
    i_rows, j_cols, dim = arr.shape
    flat = arr.reshape(-1, dim)
    fnorm = np.linalg.norm(flat, axis=1, keepdims=True)
    cnorm = np.linalg.norm(centers, axis=1, keepdims=True)
    sims = (flat / np.maximum(fnorm, 1e-30)) @ (centers / np.maximum(cnorm, 1e-30)).T
    sims[fnorm[:, 0] == 0.0] = 0.0

    z = sims / float(temperature)
    z -= z.max(axis=1, keepdims=True)
    e = np.exp(z)
    probs = e / e.sum(axis=1, keepdims=True)
    return probs.reshape(i_rows, j_cols, centers.shape[0])


def upsample_memberships(seg, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear upsample of an (I, J, K) patch-membership field to pixels.

    Pixel-center alignment: grid cell (i, j) represents the patch centered at
    image position ((i + 0.5) * stride - 0.5), so component boundaries land on
    the true patch boundaries instead of drifting toward the image corners.
    Renormalizes per pixel.
    """
    seg = np.asarray(seg, dtype=np.float64)
    i_rows, j_cols = seg.shape[:2]

    def coords(n_in, n_out):
        scale = n_out / n_in
        return np.clip((np.arange(n_out) + 0.5) / scale - 0.5, 0.0, n_in - 1.0)

    up = _interp_axis0(seg, coords(i_rows, out_h))
    up = np.swapaxes(up, 0, 1)
    up = _interp_axis0(up, coords(j_cols, out_w))
    up = np.swapaxes(up, 0, 1)
    np.clip(up, 0.0, None, out=up)
    up /= up.sum(axis=2, keepdims=True)
    return up


def segment_from_features(
    fmap,
    img,
    protos: ComponentPrototypes,
    temperature: float = 0.1,
    crf_on: bool = True,
    crf_params: CrfParams | None = None,
    crf_mode: str = "subsampled",
    crf_sample_frac: float = 0.05,
    crf_sample_min: int = 512,
    seed: int = 0,
) -> np.ndarray:
    """assign_soft -> upsample to the image grid -> optional CRF refinement."""
    img = np.asarray(img)
    seg = assign_soft(fmap, protos, temperature)
    seg = upsample_memberships(seg, img.shape[0], img.shape[1])
    if crf_on:
        params = crf_params or CrfParams()
        seg = crf_refine(
            seg,
            img,
            params,
            mode=crf_mode,
            sample_frac=crf_sample_frac,
            sample_min=crf_sample_min,
            seed=seed,
        )
    return seg


def segment_image(img, extractor, protos: ComponentPrototypes, crf_on: bool = True, **kwargs) -> np.ndarray:
    """Full single-image path with a callable extractor (mock or adapter-fed)."""
    fmap = extractor.extract(img)
    return segment_from_features(fmap, img, protos, crf_on=crf_on, **kwargs)


_PALETTE = np.array(
    [
        (230, 60, 60),
        (60, 140, 230),
        (70, 190, 90),
        (235, 190, 50),
        (170, 90, 220),
        (50, 200, 200),
        (240, 130, 40),
        (150, 150, 150),
    ],
    dtype=np.float64,
)


def render_overlay(img, seg, kept_ids, alpha: float = 0.55) -> np.ndarray:
    """Color-coded component overlay: argmax over kept components, blended."""
    image = np.asarray(img, dtype=np.float64)
    kept = list(kept_ids)
    if not kept:
        return image.astype(np.uint8)
    sub = seg[:, :, kept]
    win = np.argmax(sub, axis=2)
    out = image.copy()
    for slot, comp in enumerate(kept):
        color = _PALETTE[comp % len(_PALETTE)]
        mask = win == slot
        out[mask] = (1 - alpha) * out[mask] + alpha * color
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)
