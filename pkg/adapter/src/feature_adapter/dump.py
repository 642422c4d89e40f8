"""Walk an image tree, extract dense features, and write mirrored CFM1 files."""

import os
from dataclasses import dataclass

import numpy as np
import torch
from PIL import Image

from .backbones import load_backbone
from .cfm import write_cfm

_IMAGENET_MEAN = torch.tensor([0.485, 0.456, 0.406]).view(1, 3, 1, 1)
_IMAGENET_STD = torch.tensor([0.229, 0.224, 0.225]).view(1, 3, 1, 1)
IMAGE_EXTS = (".png", ".jpg", ".jpeg", ".bmp")


@dataclass(frozen=True)
class AdapterConfig:
    backbone: str = "wide_resnet50_2"
    block: int = 2
    size: int = 224
    pretrained: bool = True


def _load_batch(path, size):
    with Image.open(path) as im:
        rgb = im.convert("RGB").resize((size, size), Image.BILINEAR)
    arr = np.asarray(rgb, dtype=np.float32) / 255.0
    batch = torch.from_numpy(arr).permute(2, 0, 1).unsqueeze(0)
    return (batch - _IMAGENET_MEAN) / _IMAGENET_STD


def extract_feature_map(extractor, image_path, size) -> np.ndarray:
    feats = extractor(_load_batch(image_path, size))  # (1, D, I, J)
    return feats[0].permute(1, 2, 0).contiguous().numpy()


def iter_images(root):
    for dirpath, _dirs, files in os.walk(root):
        for name in sorted(files):
            if os.path.splitext(name)[1].lower() in IMAGE_EXTS:
                full = os.path.join(dirpath, name)
                yield full, os.path.relpath(full, root)


def dump_features(image_dir, out_dir, config: AdapterConfig | None = None, verbose=False):
    """One .cfm per image, mirroring the relative path under out_dir.

    Returns the list of written paths.
    """
    config = config or AdapterConfig()
    extractor = load_backbone(config.backbone, config.block, config.pretrained)
    written = []
    for full, rel in iter_images(image_dir):
        fmap = extract_feature_map(extractor, full, config.size)
        base, _ = os.path.splitext(rel)
        out_path = os.path.join(out_dir, base + ".cfm")
        os.makedirs(os.path.dirname(out_path) or ".", exist_ok=True)
        write_cfm(fmap, out_path)
        written.append(out_path)
        if verbose:
            print(f"{rel} -> {out_path} {fmap.shape}")
    if not written:
        raise FileNotFoundError(f"no images found under {image_dir}")
    return written
