"""Dense feature extraction, greedy coreset sampling, and the memory bank.

The mock extractor is a deterministic handcrafted stand-in for a pretrained
backbone: per patch it emits Lab color statistics plus a gradient term, which
is enough for color-distinct product components to cluster cleanly. Real
backbones feed the pipeline through feature files instead (extractor="file").
"""

import os
from dataclasses import dataclass, field

import numpy as np

from .color import rgb_to_lab
from .exceptions import DataError, ParameterError
from .featfile import read_feature_file
from .validation import check_feature_map, check_image

MOCK_DIM = 7


@dataclass(frozen=True)
class SampledFeatures:
    """Coreset-sampled vectors of one image plus their flattened patch indices."""

    vectors: np.ndarray
    source_indices: np.ndarray


@dataclass(frozen=True)
class MemoryBank:
    """All sampled training vectors, concatenated in input order."""

    vectors: np.ndarray
    offsets: list = field(default_factory=list)

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def mock_extract(img, stride: int = 8) -> np.ndarray:
    """Handcrafted per-patch features: (mean L, a, b; std L, a, b; mean |grad L|).

    Patches are non-overlapping stride x stride tiles; a trailing remainder
    that does not fill a tile is ignored. Constant-color regions produce
    identical vectors, so appearance (not location) drives clustering.
    """
    arr = check_image(img)
    stride = int(stride)
    if stride < 1:
        raise ParameterError("stride must be >= 1")
    h, w = arr.shape[:2]
    if h < stride or w < stride:
        raise ParameterError(f"image {h}x{w} smaller than stride {stride}")
    lab = rgb_to_lab(arr)

    i_rows, j_cols = h // stride, w // stride
    lab = lab[: i_rows * stride, : j_cols * stride]
    tiles = lab.reshape(i_rows, stride, j_cols, stride, 3)
    means = tiles.mean(axis=(1, 3))
    stds = tiles.std(axis=(1, 3))

    # Gradient strictly inside each tile: a flat-color tile scores 0 even next
    # to a strong boundary, keeping homogeneous regions cluster-tight.
    l_tiles = tiles[..., 0]
    if stride == 1:
        gmean = np.zeros((i_rows, j_cols))
    else:
        gy = np.gradient(l_tiles, axis=1)
        gx = np.gradient(l_tiles, axis=3)
        gmean = np.sqrt(gy * gy + gx * gx).mean(axis=(1, 3))

    out = np.concatenate([means, stds, gmean[..., None]], axis=2)
    return np.ascontiguousarray(out)


class MockFeatureExtractor:
    """Deterministic handcrafted backbone stand-in."""

    name = "mock"

    def __init__(self, stride: int = 8):
        self.stride = int(stride)
        self.dim = MOCK_DIM

    def extract(self, img) -> np.ndarray:
        return mock_extract(img, self.stride)


class FileFeatureExtractor:
    """Reads precomputed feature files named after the image's relative path."""

    name = "file"

    def __init__(self, directory, stride: int = 8):
        if not directory or not os.path.isdir(directory):
            raise DataError(f"feature directory not found: {directory!r}")
        self.directory = str(directory)
        self.stride = int(stride)

    def extract_for(self, image_relpath: str) -> np.ndarray:
        base, _ = os.path.splitext(image_relpath)
        path = os.path.join(self.directory, base + ".cfm")
        if not os.path.isfile(path):
            raise DataError(f"no feature file for {image_relpath!r} (looked at {path})")
        return read_feature_file(path)


def coreset_sample(fmap, r: float, seed: int = 0) -> SampledFeatures:
    """Greedy farthest-point selection of N = floor(r * I * J) patch vectors.

    Starts from the vector nearest the feature mean, then repeatedly takes the
    vector farthest (Euclidean) from the selected set. Ties resolve to the
    lowest flattened index, so the result is deterministic; `seed` is accepted
    for interface stability but never changes the outcome.
    """
    del seed
    arr = check_feature_map(fmap).astype(np.float64)
    i_rows, j_cols, dim = arr.shape
    if not 0.0 < r <= 1.0:
        raise ParameterError(f"sampling ratio must be in (0, 1], got {r}")
    n = int(np.floor(r * i_rows * j_cols))
    if n < 1:
        raise ParameterError(
            f"floor(r * I * J) = {n}; ratio {r} too small for a {i_rows}x{j_cols} grid"
        )
    flat = arr.reshape(-1, dim)
    total = flat.shape[0]

    mean = flat.mean(axis=0)
    start = int(np.argmin(np.einsum("nd,nd->n", flat - mean, flat - mean)))

    selected = np.empty(n, dtype=np.intp)
    selected[0] = start
    diff = flat - flat[start]
    min_sq = np.einsum("nd,nd->n", diff, diff)
    min_sq[start] = -np.inf  # selected points never win again, even on 0-ties
    for t in range(1, n):
        nxt = int(np.argmax(min_sq))  # argmax returns the lowest tied index
        selected[t] = nxt
        diff = flat - flat[nxt]
        np.minimum(min_sq, np.einsum("nd,nd->n", diff, diff), out=min_sq)
        min_sq[nxt] = -np.inf
    return SampledFeatures(vectors=flat[selected].copy(), source_indices=selected)


def build_memory_bank(samples) -> MemoryBank:
    """Concatenate per-image coresets in input order. No projection is applied."""
    samples = list(samples)
    if not samples:
        raise ParameterError("cannot build a memory bank from an empty sample list")
    dim = samples[0].vectors.shape[1]
    offsets, rows, total = [], [], 0
    for s in samples:
        if s.vectors.shape[1] != dim:
            raise ParameterError(
                f"inconsistent feature dims in memory bank: {s.vectors.shape[1]} != {dim}"
            )
        offsets.append(total)
        total += s.vectors.shape[0]
        rows.append(s.vectors)
    return MemoryBank(vectors=np.concatenate(rows, axis=0), offsets=offsets)
