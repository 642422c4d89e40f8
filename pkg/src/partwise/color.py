"""sRGB to CIELAB conversion (D65, 2-degree observer)."""

import numpy as np

from .validation import check_image

# sRGB -> XYZ linear transform. The white point is taken as the matrix image of
# RGB=(1,1,1) so that gray inputs land exactly on the neutral axis (a = b = 0).
_RGB2XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_WHITE = _RGB2XYZ.sum(axis=1)

_EPS = 216.0 / 24389.0
_KAPPA = 24389.0 / 27.0


def rgb_to_lab(img) -> np.ndarray:
    """Convert an 8-bit RGB image to CIELAB, returned as float64 (H, W, 3).

    L is in [0, 100]; a and b are signed. Pure grays map to a = b = 0.
    """
    arr = check_image(img).astype(np.float64) / 255.0
    linear = np.where(arr <= 0.04045, arr / 12.92, ((arr + 0.055) / 1.055) ** 2.4)
    xyz = linear @ _RGB2XYZ.T
    t = xyz / _WHITE
    f = np.where(t > _EPS, np.cbrt(t), (_KAPPA * t + 16.0) / 116.0)
    lab = np.empty_like(f)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab
