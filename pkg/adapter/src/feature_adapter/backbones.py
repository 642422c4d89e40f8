"""Backbone loading and dense-feature extraction.

Two families are supported:
  - torchvision CNNs (e.g. wide_resnet50_2): --block n selects layer{n};
    layer2 at 224px input gives the 28x28 stride-8 grid.
  - DINO ViT-S/8 via torch.hub ("dino_vits8"): --block n selects the n-th
    transformer block's patch tokens (stride 8 -> 28x28 at 224px).

Pretrained weights require network access (or a warmed torch.hub cache); the
failure is reported clearly. --no-pretrained builds a seeded random-init
network, which is still deterministic in eval mode and useful for exercising
the file contract offline.
"""

import torch
import torchvision

_TORCHVISION_CNNS = ("wide_resnet50_2", "resnet50", "resnet18")
_DINO_MODELS = ("dino_vits8", "dino_vits16", "dino_vitb8", "dino_vitb16")


class BackboneError(RuntimeError):
    pass


def available_backbones():
    return _TORCHVISION_CNNS + _DINO_MODELS


def _load_torchvision(name, pretrained):
    builder = getattr(torchvision.models, name)
    try:
        if pretrained:
            model = builder(weights="DEFAULT")
        else:
            torch.manual_seed(0)
            model = builder(weights=None)
    except Exception as exc:  # noqa: BLE001 - downloads fail in many shapes
        raise BackboneError(
            f"cannot load weights for {name!r}: {exc}. "
            "Pass --no-pretrained to run with seeded random weights, or warm the "
            "torchvision cache on a machine with network access."
        ) from exc
    return model.eval()


def _load_dino(name, pretrained):
    if not pretrained:
        raise BackboneError(
            f"{name!r} has no random-init fallback; DINO extraction needs the "
            "published weights (torch.hub cache or network access)"
        )
    try:
        model = torch.hub.load("facebookresearch/dino:main", name)
    except Exception as exc:  # noqa: BLE001
        raise BackboneError(
            f"cannot fetch {name!r} from torch.hub: {exc}. "
            "Warm the hub cache on a machine with network access first."
        ) from exc
    return model.eval()


class CnnFeatures:
    def __init__(self, name, block, pretrained=True):
        if not 1 <= block <= 4:
            raise BackboneError(f"block must be 1..4 for {name!r}, got {block}")
        self.model = _load_torchvision(name, pretrained)
        self.block = block

    @torch.no_grad()
    def __call__(self, batch: torch.Tensor) -> torch.Tensor:
        m = self.model
        x = m.maxpool(m.relu(m.bn1(m.conv1(batch))))
        for idx in range(1, self.block + 1):
            x = getattr(m, f"layer{idx}")(x)
        return x  # (B, D, I, J)


class DinoFeatures:
    def __init__(self, name, block, pretrained=True):
        self.model = _load_dino(name, pretrained)
        self.block = block
        self.patch = 8 if name.endswith("8") else 16

    @torch.no_grad()
    def __call__(self, batch: torch.Tensor) -> torch.Tensor:
        tokens = self.model.get_intermediate_layers(batch, n=len(self.model.blocks))
        picked = tokens[self.block - 1][:, 1:, :]  # drop the CLS token
        b, n, d = picked.shape
        side = int(n**0.5)
        return picked.reshape(b, side, side, d).permute(0, 3, 1, 2)


def load_backbone(name, block, pretrained=True):
    if name in _TORCHVISION_CNNS:
        return CnnFeatures(name, block, pretrained)
    if name in _DINO_MODELS:
        return DinoFeatures(name, block, pretrained)
    raise BackboneError(
        f"unknown backbone {name!r}; available: {', '.join(available_backbones())}"
    )
