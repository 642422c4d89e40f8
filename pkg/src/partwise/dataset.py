"""PNG image IO and MVTec-style dataset directory handling.

Layout: <root>/train/good/*.png, <root>/test/good/*.png,
<root>/test/<defect_kind>/*.png, optional <root>/ground_truth/.
"""

import os

import numpy as np
from PIL import Image as PILImage

from .exceptions import DataError

IMAGE_EXTS = (".png",)


def load_image(path) -> np.ndarray:
    try:
        with PILImage.open(path) as im:
            return np.asarray(im.convert("RGB"), dtype=np.uint8)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read image {path}: {exc}") from exc


def save_image(arr, path) -> None:
    arr = np.asarray(arr, dtype=np.uint8)
    PILImage.fromarray(arr, mode="RGB").save(path, format="PNG")


def list_images(directory):
    """Sorted (lexicographic) image paths directly inside `directory`."""
    if not os.path.isdir(directory):
        return []
    names = sorted(
        n for n in os.listdir(directory) if os.path.splitext(n)[1].lower() in IMAGE_EXTS
    )
    return [os.path.join(directory, n) for n in names]


def training_images(root):
    """Paths of <root>/train/good, lexicographic order."""
    paths = list_images(os.path.join(root, "train", "good"))
    if not paths:
        raise DataError(f"no training images under {os.path.join(root, 'train', 'good')}")
    return paths


def test_images(root):
    """List of (path, label, kind): label 0 for good, 1 otherwise."""
    test_dir = os.path.join(root, "test")
    if not os.path.isdir(test_dir):
        raise DataError(f"no test directory under {root}")
    out = []
    for kind in sorted(os.listdir(test_dir)):
        sub = os.path.join(test_dir, kind)
        if not os.path.isdir(sub):
            continue
        label = 0 if kind == "good" else 1
        out.extend((p, label, kind) for p in list_images(sub))
    if not out:
        raise DataError(f"no test images under {test_dir}")
    return out


def relative_id(path, root) -> str:
    rel = os.path.relpath(os.path.abspath(path), os.path.abspath(root))
    return rel.replace(os.sep, "/")
