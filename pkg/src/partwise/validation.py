"""Input validation helpers shared by the estimators and the functional API."""

import numpy as np

from .exceptions import ParameterError


def check_image(img) -> np.ndarray:
    """Validate an 8-bit RGB image and return it as a (H, W, 3) uint8 array."""
    arr = np.asarray(img)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ParameterError(f"expected (H, W, 3) RGB image, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ParameterError("image must have H >= 1 and W >= 1")
    if arr.dtype != np.uint8:
        if np.issubdtype(arr.dtype, np.floating) or np.issubdtype(arr.dtype, np.integer):
            if arr.min() < 0 or arr.max() > 255:
                raise ParameterError("channel values must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        else:
            raise ParameterError(f"unsupported image dtype {arr.dtype}")
    return arr


def check_scalar_field(field, name: str = "field") -> np.ndarray:
    """Validate a 2-D real field with values in [0, 1]; returns float64."""
    arr = np.asarray(field, dtype=np.float64)
    if arr.ndim != 2:
        raise ParameterError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} contains non-finite values")
    if arr.min() < -1e-9 or arr.max() > 1 + 1e-9:
        raise ParameterError(f"{name} values must lie in [0, 1]")
    return np.clip(arr, 0.0, 1.0)


def check_feature_map(fmap, name: str = "feature map") -> np.ndarray:
    """Validate an (I, J, D) real grid; dtype is preserved."""
    arr = np.asarray(fmap)
    if arr.ndim != 3:
        raise ParameterError(f"{name} must be (I, J, D), got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise ParameterError(f"{name} dims must all be >= 1")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} contains non-finite values")
    return arr


def check_segmentation_field(seg, tol: float = 1e-6) -> np.ndarray:
    """Validate an (H, W, K) membership field: values in [0,1], rows sum to 1."""
    arr = np.asarray(seg, dtype=np.float64)
    if arr.ndim != 3:
        raise ParameterError(f"segmentation field must be (H, W, K), got {arr.shape}")
    if arr.min() < -tol or arr.max() > 1 + tol:
        raise ParameterError("memberships must lie in [0, 1]")
    sums = arr.sum(axis=2)
    if np.max(np.abs(sums - 1.0)) > tol:
        raise ParameterError("memberships must sum to 1 at every pixel")
    return arr


def check_odd_size(size: int) -> int:
    size = int(size)
    if size < 1 or size % 2 == 0:
        raise ParameterError(f"window size must be odd and >= 1, got {size}")
    return size
