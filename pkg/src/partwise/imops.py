"""Basic image-grid operations: box mean filtering and bilinear resizing."""

import numpy as np

from .exceptions import ParameterError
from .validation import check_odd_size


def mean_filter(field, size: int) -> np.ndarray:
    """Box mean with edge-replicated borders.

    Each output pixel is the arithmetic mean of its size x size neighborhood;
    `size` must be odd. Computed with a summed-area table, so constant fields
    stay constant exactly.
    """
    size = check_odd_size(size)
    arr = np.asarray(field, dtype=np.float64)
    if arr.ndim != 2:
        raise ParameterError(f"mean_filter expects a 2-D field, got shape {arr.shape}")
    if size == 1:
        return arr.copy()
    r = size // 2
    padded = np.pad(arr, r, mode="edge")
    c = padded.cumsum(axis=0).cumsum(axis=1)
    c = np.pad(c, ((1, 0), (1, 0)))
    h, w = arr.shape
    sums = (
        c[size : size + h, size : size + w]
        - c[0:h, size : size + w]
        - c[size : size + h, 0:w]
        + c[0:h, 0:w]
    )
    return sums / float(size * size)


def _axis_coords(n_in: int, n_out: int) -> np.ndarray:
    # Corner-aligned sampling; a single output sample sits at the center.
    if n_out == 1:
        return np.array([(n_in - 1) / 2.0])
    return np.linspace(0.0, n_in - 1.0, n_out)


def _interp_axis0(arr: np.ndarray, coords: np.ndarray) -> np.ndarray:
    i0 = np.clip(np.floor(coords).astype(np.intp), 0, arr.shape[0] - 1)
    i1 = np.minimum(i0 + 1, arr.shape[0] - 1)
    w = (coords - i0).reshape((-1,) + (1,) * (arr.ndim - 1))
    return arr[i0] * (1.0 - w) + arr[i1] * w


def bilinear_resize(arr, out_h: int, out_w: int) -> np.ndarray:
    """Corner-aligned bilinear resize over the first two axes.

    Works for 2-D scalar fields and (H, W, C) stacks alike; returns float64.
    Resizing to the input size is the identity.
    """
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim < 2:
        raise ParameterError("bilinear_resize expects at least 2 dimensions")
    out_h, out_w = int(out_h), int(out_w)
    if out_h < 1 or out_w < 1:
        raise ParameterError("output size must be >= 1 in both axes")
    a = _interp_axis0(a, _axis_coords(a.shape[0], out_h))
    a = np.swapaxes(a, 0, 1)
    a = _interp_axis0(a, _axis_coords(a.shape[0], out_w))
    return np.swapaxes(a, 0, 1)
