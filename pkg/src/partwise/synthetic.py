"""Synthetic datasets: the toy circle-counting set and a multi-component
product generator with logical/structural defect injection.

Both generators are bit-deterministic under a fixed seed (per-image RNG
streams derived from (seed, category, index)), and every defect image is
rendered from the same placements as its normal base, so it differs only
within the defect's declared region.
"""

import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .dataset import save_image
from .exceptions import DataError, ParameterError

DEFECT_KINDS = ("missing", "extra", "color_swap", "size_change", "scratch")


# ---------------------------------------------------------------- toy circles


@dataclass(frozen=True)
class CircleSample:
    count: int
    index: int
    image: np.ndarray
    mask: np.ndarray  # bool, union of circle interiors


def _disk_mask(size, cx, cy, radius):
    y0, y1 = max(0, cy - radius), min(size, cy + radius + 1)
    x0, x1 = max(0, cx - radius), min(size, cx + radius + 1)
    ys, xs = np.mgrid[y0:y1, x0:x1]
    patch = (ys - cy) ** 2 + (xs - cx) ** 2 <= radius * radius
    return (slice(y0, y1), slice(x0, x1)), patch


def _place_centers(rng, n, size, radius, min_dist, margin, max_tries=400):
    for _ in range(60):  # restart budget if a layout wedges
        centers = []
        ok = True
        for _i in range(n):
            for _try in range(max_tries):
                cx = int(rng.integers(margin, size - margin))
                cy = int(rng.integers(margin, size - margin))
                if all((cx - x) ** 2 + (cy - y) ** 2 >= min_dist * min_dist for x, y in centers):
                    centers.append((cx, cy))
                    break
            else:
                ok = False
                break
        if ok:
            return centers
    raise DataError(f"could not place {n} circles of radius {radius} in a {size}px canvas")


def circle_image(
    count: int,
    rng,
    size: int = 256,
    radius: int = 15,
    value=(20, 20, 20),
    background=(255, 255, 255),
    min_dist_factor: float = 2.2,
):
    """One toy image with `count` non-touching circles, plus its mask.

    Centers are integer pixels, so every circle rasterizes to the identical
    pixel count. min_dist_factor > 2 keeps circles 8-disconnected so the
    ground-truth count equals the connected-region count.
    """
    img = np.empty((size, size, 3), dtype=np.uint8)
    img[:] = np.asarray(background, dtype=np.uint8)
    mask = np.zeros((size, size), dtype=bool)
    margin = radius + 2
    centers = _place_centers(rng, count, size, radius, min_dist_factor * radius, margin)
    for cx, cy in centers:
        window, patch = _disk_mask(size, cx, cy, radius)
        mask[window] |= patch
        img[window][patch] = value
    return img, mask


def gen_circle_dataset(
    seed: int = 0,
    counts=tuple(range(2, 14)),
    per_count: int = 100,
    size: int = 256,
    radius: int = 15,
    value=(20, 20, 20),
    background=(255, 255, 255),
    min_dist_factor: float = 2.2,
):
    """Yield CircleSample for every (count, index), deterministically."""
    for count in counts:
        for index in range(per_count):
            rng = np.random.default_rng([int(seed), int(count), int(index)])
            img, mask = circle_image(
                count,
                rng,
                size=size,
                radius=radius,
                value=value,
                background=background,
                min_dist_factor=min_dist_factor,
            )
            yield CircleSample(count=count, index=index, image=img, mask=mask)


# ------------------------------------------------------------- product scenes


@dataclass(frozen=True)
class ComponentSpec:
    name: str
    shape: str  # disk | square | bar
    color: tuple
    size_range: tuple  # (lo, hi) pixels, characteristic radius/half-side
    count_range: tuple = (1, 1)  # inclusive
    color_jitter: int = 2


@dataclass(frozen=True)
class SceneSpec:
    size: int = 256
    background: tuple = (236, 236, 233)
    components: tuple = ()
    margin: int = 18
    min_gap: int = 8

    def component(self, name: str) -> ComponentSpec:
        for c in self.components:
            if c.name == name:
                return c
        raise ParameterError(f"no component named {name!r} in scene spec")


@dataclass(frozen=True)
class Placement:
    component: str
    shape: str
    cx: int
    cy: int
    size: int
    color: tuple


@dataclass
class Scene:
    spec: SceneSpec
    placements: list = field(default_factory=list)

    def counts(self) -> dict:
        out = {c.name: 0 for c in self.spec.components}
        for p in self.placements:
            out[p.component] += 1
        return out


def _stamp(canvas, mask_out, placement: Placement):
    size = canvas.shape[0]
    r = placement.size
    cx, cy = placement.cx, placement.cy
    if placement.shape == "disk":
        window, patch = _disk_mask(size, cx, cy, r)
    elif placement.shape == "square":
        window = (slice(max(0, cy - r), min(size, cy + r + 1)), slice(max(0, cx - r), min(size, cx + r + 1)))
        patch = np.ones((window[0].stop - window[0].start, window[1].stop - window[1].start), dtype=bool)
    elif placement.shape == "bar":
        half_h = max(2, r // 3)
        window = (
            slice(max(0, cy - half_h), min(size, cy + half_h + 1)),
            slice(max(0, cx - r), min(size, cx + r + 1)),
        )
        patch = np.ones((window[0].stop - window[0].start, window[1].stop - window[1].start), dtype=bool)
    else:
        raise ParameterError(f"unknown shape {placement.shape!r}")
    canvas[window][patch] = placement.color
    if mask_out is not None:
        mask_out[window] |= patch
    return window, patch


def _bounding_radius(placement: Placement) -> float:
    if placement.shape == "disk":
        return float(placement.size)
    return float(placement.size) * math.sqrt(2.0)


def _jittered(color, jitter, rng):
    c = np.asarray(color, dtype=np.int64) + rng.integers(-jitter, jitter + 1, size=3)
    return tuple(int(v) for v in np.clip(c, 0, 255))


def _place_instance(scene: Scene, comp: ComponentSpec, rng, size_override=None, max_tries=400) -> Placement:
    spec = scene.spec
    lo, hi = comp.size_range
    size = int(size_override if size_override is not None else rng.integers(lo, hi + 1))
    color = _jittered(comp.color, comp.color_jitter, rng)
    r_new = size if comp.shape == "disk" else size * math.sqrt(2.0)
    low, high = spec.margin + size, spec.size - spec.margin - size
    if low >= high:
        raise DataError(
            f"component {comp.name!r} (size {size}) does not fit a {spec.size}px canvas"
        )
    for _ in range(max_tries):
        cx = int(rng.integers(low, high))
        cy = int(rng.integers(low, high))
        clear = True
        for p in scene.placements:
            need = r_new + _bounding_radius(p) + spec.min_gap
            if (cx - p.cx) ** 2 + (cy - p.cy) ** 2 < need * need:
                clear = False
                break
        if clear:
            placement = Placement(comp.name, comp.shape, cx, cy, size, color)
            scene.placements.append(placement)
            return placement
    raise DataError(
        f"cannot place component {comp.name!r}; scene spec is too crowded for its sizes"
    )


def normal_scene(spec: SceneSpec, rng) -> Scene:
    if not spec.components:
        raise ParameterError("scene spec has no components")
    last_err = None
    for _restart in range(40):  # a wedged layout is retried wholesale
        scene = Scene(spec=spec)
        try:
            for comp in spec.components:
                lo, hi = comp.count_range
                n = int(rng.integers(lo, hi + 1))
                for _ in range(n):
                    _place_instance(scene, comp, rng)
            return scene
        except DataError as err:
            last_err = err
    raise last_err


def render_scene(scene: Scene, color_map=None):
    """Rasterize a scene; returns (image, per-component bool masks)."""
    spec = scene.spec
    img = np.empty((spec.size, spec.size, 3), dtype=np.uint8)
    img[:] = np.asarray(spec.background, dtype=np.uint8)
    masks = {c.name: np.zeros((spec.size, spec.size), dtype=bool) for c in spec.components}
    for p in scene.placements:
        color = p.color if color_map is None else color_map.get(p.component, p.color)
        _stamp(img, masks[p.component], replace(p, color=color))
    return img, masks


def _scratch(img, rng, length=60, value=(30, 30, 30)):
    """Thin dark polyline; returns the affected mask."""
    size = img.shape[0]
    mask = np.zeros(img.shape[:2], dtype=bool)
    x = float(rng.integers(10, size - 10))
    y = float(rng.integers(10, size - 10))
    angle = float(rng.uniform(0, 2 * math.pi))
    for _ in range(length):
        xi, yi = int(round(x)), int(round(y))
        if 1 <= xi < size - 1 and 1 <= yi < size - 1:
            mask[yi - 1 : yi + 2, xi - 1 : xi + 2] = True
        angle += float(rng.uniform(-0.3, 0.3))
        x += math.cos(angle)
        y += math.sin(angle)
    img[mask] = value
    return mask


@dataclass(frozen=True)
class ProductSample:
    index: int
    kind: str  # "good" or a defect kind
    label: int  # 0 normal, 1 anomalous
    image: np.ndarray
    masks: dict  # component name -> bool mask
    counts: dict
    defect_region: np.ndarray | None = None


def defect_scene(spec: SceneSpec, kind: str, rng, swap_pair=None, size_factor: float = 1.6):
    """A normal base scene plus exactly one injected violation."""
    if kind not in DEFECT_KINDS:
        raise ParameterError(f"unknown defect kind {kind!r}; choose from {DEFECT_KINDS}")
    scene = normal_scene(spec, rng)
    base_img, _ = render_scene(scene)

    if kind == "missing":
        target = spec.components[int(rng.integers(len(spec.components)))].name
        kept = [p for p in scene.placements if p.component != target]
        edited = Scene(spec=spec, placements=kept)
        img, masks = render_scene(edited)
    elif kind == "extra":
        comp = spec.components[int(rng.integers(len(spec.components)))]
        for _restart in range(40):
            try:
                _place_instance(scene, comp, rng)
                break
            except DataError:
                # no room next to the current layout: draw a fresh base scene
                scene = normal_scene(spec, rng)
                base_img, _ = render_scene(scene)
        else:
            raise DataError("cannot fit an extra instance; scene spec too crowded")
        img, masks = render_scene(scene)
    elif kind == "color_swap":
        if swap_pair is None:
            if len(spec.components) < 2:
                raise ParameterError("color_swap needs at least two components")
            idx = rng.permutation(len(spec.components))[:2]
            swap_pair = (spec.components[idx[0]].name, spec.components[idx[1]].name)
        a, b = swap_pair
        cmap = {a: spec.component(b).color, b: spec.component(a).color}
        img, masks = render_scene(scene, color_map=cmap)
    elif kind == "size_change":
        target = scene.placements[int(rng.integers(len(scene.placements)))]
        scene.placements.remove(target)
        grown = replace(target, size=max(2, int(round(target.size * size_factor))))
        scene.placements.append(grown)
        img, masks = render_scene(scene)
    else:  # scratch
        img, masks = render_scene(scene)
        region = _scratch(img, rng)
        return img, masks, scene.counts(), region

    region = np.any(img != base_img, axis=2)
    return img, masks, scene.counts(), region


def gen_product_dataset(
    spec: SceneSpec,
    n_normal: int,
    n_test_normal: int = 0,
    defects: dict | None = None,
    seed: int = 0,
):
    """(train_samples, test_samples) of ProductSample; deterministic per seed."""
    defects = defects or {}
    for kind in defects:
        if kind not in DEFECT_KINDS:
            raise ParameterError(f"unknown defect kind {kind!r}")
    train = []
    for i in range(n_normal):
        rng = np.random.default_rng([int(seed), 0, i])
        scene = normal_scene(spec, rng)
        img, masks = render_scene(scene)
        train.append(ProductSample(i, "good", 0, img, masks, scene.counts()))
    test = []
    for i in range(n_test_normal):
        rng = np.random.default_rng([int(seed), 1, i])
        scene = normal_scene(spec, rng)
        img, masks = render_scene(scene)
        test.append(ProductSample(i, "good", 0, img, masks, scene.counts()))
    for k_idx, (kind, n_kind) in enumerate(sorted(defects.items())):
        for i in range(n_kind):
            rng = np.random.default_rng([int(seed), 2 + k_idx, i])
            img, masks, counts, region = defect_scene(spec, kind, rng)
            test.append(ProductSample(i, kind, 1, img, masks, counts, region))
    return train, test


def write_product_dataset(spec: SceneSpec, out_dir, n_train, n_test_normal, defects, seed=0):
    """Write an MVTec-style directory tree; returns (train, test) samples."""
    train, test = gen_product_dataset(spec, n_train, n_test_normal, defects, seed=seed)
    os.makedirs(os.path.join(out_dir, "train", "good"), exist_ok=True)
    for s in train:
        save_image(s.image, os.path.join(out_dir, "train", "good", f"{s.index:04d}.png"))
    for s in test:
        sub = os.path.join(out_dir, "test", s.kind)
        os.makedirs(sub, exist_ok=True)
        save_image(s.image, os.path.join(sub, f"{s.index:04d}.png"))
        if s.defect_region is not None:
            gt = os.path.join(out_dir, "ground_truth", s.kind)
            os.makedirs(gt, exist_ok=True)
            save_image(
                np.repeat(s.defect_region[:, :, None].astype(np.uint8) * 255, 3, axis=2),
                os.path.join(gt, f"{s.index:04d}_mask.png"),
            )
    return train, test


def default_product_spec(size: int = 256) -> SceneSpec:
    """Three color-distinct components on a light background.

    Sizes are chosen so no two components overlap in area even at the jitter
    extremes; a color swap between any pair is then always measurable as an
    area change of the color-defined clusters.
    """
    return SceneSpec(
        size=size,
        min_gap=14,  # keeps instance masks disconnected even after downsampling
        components=(
            ComponentSpec("rotor", "disk", (200, 30, 30), (31, 34), (1, 1)),
            ComponentSpec("housing", "square", (40, 60, 200), (24, 25), (1, 1)),
            ComponentSpec("pellet", "disk", (40, 170, 60), (12, 12), (4, 4)),
        ),
    )
