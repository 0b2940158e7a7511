"""Synthetic desk-scale scene generator.

Each scene is a textured background, one target shape, at least one
distractor shape, and a skin-toned "hand" blob placed adjacent to the target.
The generator emits the image plus ground-truth object / hand / distractor
masks, so it doubles as the oracle for segmentation and saliency benchmarks.

Two scene styles:
  - "paired": the distractor is another class's shape, drawn from the same
    appearance family as targets. The hand is then the only cue that tells
    target from distractor, which is what the 4-vs-3-channel segmenter
    comparison needs.
  - "neutral": distractors are grey blobs, so the class is readable from the
    target object alone. Used for classification benchmarks; the optional
    spurious cue adds a class-correlated background patch.

Everything is deterministic per (seed, scene index).
"""

from __future__ import annotations

import colorsys
import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import ndimage

from .core import GestureType
from .imaging import save_png, resize_float_bilinear
from .manifest import DatasetManifest, ManifestRecord, save_manifest

GESTURE_CYCLE = (
    GestureType.EXHIBITING,
    GestureType.POINTING,
    GestureType.PRESENTING,
    GestureType.TOUCHING,
)

IMAGES_PER_PARTICIPANT = 12

# class-correlated background patches for the spurious-cue experiments:
# (corner, RGB). Corners are far from the central placement region.
SPURIOUS_PATCHES = (
    ("top_left", (225, 45, 205)),
    ("bottom_right", (45, 225, 225)),
    ("top_right", (235, 235, 55)),
    ("bottom_left", (250, 250, 250)),
)
PATCH_SIZE = 18


@dataclass(frozen=True)
class ClassSpec:
    name: str
    shape: str  # "square" | "circle" | "triangle"
    hue: float
    saturation: float = 0.75
    value: float = 200.0


def scene_config_segmentation(size: int = 128) -> "SceneConfig":
    # the tan triangle sits inside the skin-tone hue band on purpose: it
    # poisons the "find skin pixels in RGB" shortcut for the no-hand-channel
    # ablation while the explicit hand channel stays unambiguous
    classes = (
        ClassSpec("green_square", "square", hue=0.33),
        ClassSpec("blue_circle", "circle", hue=0.60),
        ClassSpec("tan_triangle", "triangle", hue=0.07, saturation=0.45, value=205.0),
    )
    return SceneConfig(size=size, classes=classes, distractor_style="paired")


def scene_config_classification(spurious_cue: bool = False, n_classes: int = 2, size: int = 128) -> "SceneConfig":
    classes = (
        ClassSpec("green_square", "square", hue=0.33),
        ClassSpec("blue_circle", "circle", hue=0.60),
        ClassSpec("purple_triangle", "triangle", hue=0.78),
    )[:n_classes]
    return SceneConfig(size=size, classes=classes, distractor_style="neutral", spurious_cue=spurious_cue)


def scene_config_shared_palette(n_classes: int = 2, size: int = 128) -> "SceneConfig":
    """Classes differ by shape only; colors are drawn from one shared palette.

    Classification then has to rely on geometry, which is what makes narrow
    (redundant) teaching sets generalize poorly across scales.
    """
    shapes = ("square", "circle", "triangle")
    classes = tuple(ClassSpec(f"green_{s}", s, hue=0.33) for s in shapes[:n_classes])
    return SceneConfig(size=size, classes=classes, distractor_style="neutral")


@dataclass(frozen=True)
class SceneConfig:
    classes: tuple[ClassSpec, ...]
    size: int = 128
    distractor_style: str = "paired"  # "paired" | "neutral"
    n_distractors: int = 1
    spurious_cue: bool = False
    base_radius: float = 14.0

    def __post_init__(self):
        if self.distractor_style not in ("paired", "neutral"):
            raise ValueError(f"unknown distractor_style: {self.distractor_style}")
        if not self.classes:
            raise ValueError("need at least one class")


@dataclass(frozen=True)
class SceneParams:
    """Knobs a simulated teacher controls for one demonstration."""

    target_cx: float
    target_cy: float
    target_scale: float  # multiplies base_radius
    target_angle: float  # radians
    color_shift: float   # hue offset in [-1, 1] units of the jitter range
    brightness: float    # background brightness factor
    hand_angle: float    # direction of the hand relative to the target


PARAM_RANGES = {
    "target_scale": (0.65, 1.35),
    "target_angle": (0.0, math.pi),
    "color_shift": (-1.0, 1.0),
    "brightness": (0.7, 1.3),
    "hand_angle": (0.0, 2.0 * math.pi),
}


def sample_params(rng: np.random.Generator, config: SceneConfig, redundant: bool = False) -> SceneParams:
    """Diverse teachers sample every knob across its full range; redundant
    teachers repeat near-identical mid-range values."""
    size = config.size
    margin = 30.0
    if redundant:
        mid = {k: (lo + hi) / 2.0 for k, (lo, hi) in PARAM_RANGES.items()}
        wiggle = lambda k: (PARAM_RANGES[k][1] - PARAM_RANGES[k][0]) * 0.01 * rng.uniform(-1, 1)
        return SceneParams(
            target_cx=size / 2.0 + rng.uniform(-2, 2),
            target_cy=size / 2.0 + rng.uniform(-2, 2),
            target_scale=mid["target_scale"] + wiggle("target_scale"),
            target_angle=mid["target_angle"] + wiggle("target_angle"),
            color_shift=mid["color_shift"] + wiggle("color_shift"),
            brightness=mid["brightness"] + wiggle("brightness"),
            hand_angle=mid["hand_angle"] + wiggle("hand_angle"),
        )
    return SceneParams(
        target_cx=rng.uniform(margin, size - margin),
        target_cy=rng.uniform(margin, size - margin),
        target_scale=rng.uniform(*PARAM_RANGES["target_scale"]),
        target_angle=rng.uniform(*PARAM_RANGES["target_angle"]),
        color_shift=rng.uniform(*PARAM_RANGES["color_shift"]),
        brightness=rng.uniform(*PARAM_RANGES["brightness"]),
        hand_angle=rng.uniform(*PARAM_RANGES["hand_angle"]),
    )


@dataclass
class Scene:
    index: int
    class_id: int
    image: np.ndarray            # HxWx3 uint8
    object_mask: np.ndarray      # HxW uint8 {0,255}
    hand_mask: np.ndarray        # HxW uint8 {0,255}
    distractor_mask: np.ndarray  # HxW uint8 {0,255}, union of distractors
    target_center: tuple[float, float]
    distractor_centers: list[tuple[float, float]] = field(default_factory=list)
    params: Optional[SceneParams] = None


# --- rasterization -----------------------------------------------------------

def _grids(size: int):
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    return xx, yy


def _ellipse(size, cx, cy, a, b, angle) -> np.ndarray:
    xx, yy = _grids(size)
    dx, dy = xx - cx, yy - cy
    ca, sa = math.cos(angle), math.sin(angle)
    u = dx * ca + dy * sa
    v = -dx * sa + dy * ca
    return (u / a) ** 2 + (v / b) ** 2 <= 1.0


def _square(size, cx, cy, half, angle) -> np.ndarray:
    xx, yy = _grids(size)
    dx, dy = xx - cx, yy - cy
    ca, sa = math.cos(angle), math.sin(angle)
    u = dx * ca + dy * sa
    v = -dx * sa + dy * ca
    return np.maximum(np.abs(u), np.abs(v)) <= half


def _triangle(size, cx, cy, r, angle) -> np.ndarray:
    verts = [(cx + r * math.cos(angle + k * 2 * math.pi / 3),
              cy + r * math.sin(angle + k * 2 * math.pi / 3)) for k in range(3)]
    xx, yy = _grids(size)
    # same-side test; sign of the winding depends on image-vs-math y axis
    pos = np.ones((size, size), dtype=bool)
    neg = np.ones((size, size), dtype=bool)
    for i in range(3):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % 3]
        cross = (x2 - x1) * (yy - y1) - (y2 - y1) * (xx - x1)
        pos &= cross >= 0
        neg &= cross <= 0
    return pos | neg


def _shape_mask(shape: str, size, cx, cy, radius, angle) -> np.ndarray:
    if shape == "square":
        return _square(size, cx, cy, radius * 0.82, angle)
    if shape == "circle":
        return _ellipse(size, cx, cy, radius, radius, 0.0)
    if shape == "triangle":
        return _triangle(size, cx, cy, radius * 1.2, angle)
    raise ValueError(f"unknown shape: {shape}")


def _blob(size, rng, cx, cy, r) -> np.ndarray:
    mask = np.zeros((size, size), dtype=bool)
    for _ in range(3):
        ox, oy = rng.uniform(-r * 0.4, r * 0.4, size=2)
        a = r * rng.uniform(0.55, 0.95)
        b = a * rng.uniform(0.6, 1.0)
        mask |= _ellipse(size, cx + ox, cy + oy, a, b, rng.uniform(0, math.pi))
    return mask


def _hand(size, rng, cx, cy, radius, toward_angle):
    """Palm ellipse plus finger bumps facing the target direction."""
    ca, sa = math.cos(toward_angle), math.sin(toward_angle)
    mask = _ellipse(size, cx, cy, radius, radius * 0.72, toward_angle)
    for off in (-0.55, 0.0, 0.55):
        fx = cx + ca * radius * 0.85 - sa * off * radius * 0.8
        fy = cy + sa * radius * 0.85 + ca * off * radius * 0.8
        fr = radius * rng.uniform(0.28, 0.4)
        mask |= _ellipse(size, fx, fy, fr * 1.5, fr, toward_angle)
    return mask


def _hsv_color(rng, hue, sat, val, hue_jitter=0.03, color_shift=0.0):
    h = (hue + color_shift * hue_jitter + rng.uniform(-hue_jitter, hue_jitter)) % 1.0
    s = float(np.clip(sat + rng.uniform(-0.12, 0.12), 0.05, 1.0))
    v = float(np.clip(val + rng.uniform(-25, 25), 30, 255))
    r, g, b = colorsys.hsv_to_rgb(h, s, v / 255.0)
    return np.array([r * 255, g * 255, b * 255], dtype=np.float32)


def _skin_color(rng):
    # wide skin-tone band: pale to dark, hue ~7..32 degrees
    h = rng.uniform(0.02, 0.09)
    s = rng.uniform(0.28, 0.62)
    v = rng.uniform(120, 235)
    r, g, b = colorsys.hsv_to_rgb(h, s, v / 255.0)
    return np.array([r * 255, g * 255, b * 255], dtype=np.float32)


def _background(size, rng, brightness: float) -> np.ndarray:
    base_v = rng.uniform(70, 115) * brightness
    hue = rng.uniform(0.50, 0.65)
    sat = rng.uniform(0.04, 0.18)
    r, g, b = colorsys.hsv_to_rgb(hue, sat, min(base_v, 255) / 255.0)
    base = np.array([r * 255, g * 255, b * 255], dtype=np.float32)
    coarse = rng.uniform(-16, 16, size=(9, 9, 3)).astype(np.float32)
    texture = np.stack(
        [resize_float_bilinear(coarse[:, :, c], size, size) for c in range(3)], axis=-1
    )
    fine = rng.uniform(-5, 5, size=(size, size, 3)).astype(np.float32)
    return base[None, None, :] + texture + fine


def _patch_box(corner: str, size: int) -> tuple[slice, slice]:
    m, p = 4, PATCH_SIZE
    boxes = {
        "top_left": (slice(m, m + p), slice(m, m + p)),
        "top_right": (slice(m, m + p), slice(size - m - p, size - m)),
        "bottom_left": (slice(size - m - p, size - m), slice(m, m + p)),
        "bottom_right": (slice(size - m - p, size - m), slice(size - m - p, size - m)),
    }
    return boxes[corner]


def render_scene(
    config: SceneConfig,
    index: int,
    seed: int,
    class_id: Optional[int] = None,
    params: Optional[SceneParams] = None,
) -> Scene:
    rng = np.random.default_rng([seed, index])
    size = config.size
    n_classes = len(config.classes)
    if class_id is None:
        class_id = index % n_classes
    spec = config.classes[class_id]
    if params is None:
        params = sample_params(rng, config)

    canvas = _background(size, rng, params.brightness)

    patch_region = np.zeros((size, size), dtype=bool)
    if config.spurious_cue:
        corner, rgb = SPURIOUS_PATCHES[class_id % len(SPURIOUS_PATCHES)]
        ys, xs = _patch_box(corner, size)
        canvas[ys, xs] = np.array(rgb, dtype=np.float32) + rng.uniform(-8, 8, size=3)
        patch_region[ys, xs] = True

    radius = config.base_radius * params.target_scale
    target_mask = _shape_mask(spec.shape, size, params.target_cx, params.target_cy, radius, params.target_angle)

    # distractors: rejection-sampled away from the target (and the cue patch)
    distractor_mask = np.zeros((size, size), dtype=bool)
    distractor_centers: list[tuple[float, float]] = []
    margin = 22.0
    for _ in range(config.n_distractors):
        for attempt in range(80):
            dx = rng.uniform(margin, size - margin)
            dy = rng.uniform(margin, size - margin)
            dr = config.base_radius * rng.uniform(0.65, 1.35)
            dist = math.hypot(dx - params.target_cx, dy - params.target_cy)
            if dist < radius + dr + 26:
                continue
            if config.distractor_style == "paired":
                other = int(rng.integers(0, n_classes - 1))
                other = other if other < class_id else other + 1
                ospec = config.classes[other]
                m = _shape_mask(ospec.shape, size, dx, dy, dr, rng.uniform(0, math.pi))
                color = _hsv_color(rng, ospec.hue, ospec.saturation, ospec.value)
            else:
                m = _blob(size, rng, dx, dy, dr)
                grey = rng.uniform(85, 150)
                color = np.array([grey, grey * rng.uniform(0.9, 1.05), grey * rng.uniform(0.85, 1.0)], dtype=np.float32)
            if (m & patch_region).any() or (m & target_mask).any():
                continue
            canvas[m] = color + rng.uniform(-10, 10, size=3)
            distractor_mask |= m
            distractor_centers.append((dx, dy))
            break
        else:
            raise RuntimeError(f"could not place distractor in scene {index}")

    target_color = _hsv_color(rng, spec.hue, spec.saturation, spec.value, color_shift=params.color_shift)
    canvas[target_mask] = target_color + rng.uniform(-10, 10, size=3)

    # hand: tangent to the target, fingers reaching over its near edge.
    # Up to 25% occlusion of the target is allowed; the object mask keeps the
    # visible part only (like a human annotator would).
    if distractor_mask.any():
        distractor_clearance = ndimage.distance_transform_edt(~distractor_mask)
    else:
        distractor_clearance = np.full((size, size), np.inf)
    hand_r = rng.uniform(7.0, 11.5)
    hand_mask = None
    hand_angle = params.hand_angle
    for attempt in range(90):
        gap = rng.uniform(0.0, 2.5)
        hcx = params.target_cx + math.cos(hand_angle) * (radius + hand_r + gap)
        hcy = params.target_cy + math.sin(hand_angle) * (radius + hand_r + gap)
        candidate = _hand(size, rng, hcx, hcy, hand_r, hand_angle + math.pi)
        ok_inside = candidate[1:-1, 1:-1].sum() == candidate.sum() and candidate.any()
        occlusion = (candidate & target_mask).sum() / max(int(target_mask.sum()), 1)
        min_clear = 8.0 if attempt < 60 else 2.0  # relax if the scene is crowded
        clear = not (candidate & patch_region).any() and (
            not candidate.any() or distractor_clearance[candidate].min() > min_clear
        )
        if ok_inside and clear and occlusion <= 0.25:
            hand_mask = candidate
            break
        hand_angle = rng.uniform(0, 2 * math.pi)
    if hand_mask is None:
        raise RuntimeError(f"could not place hand in scene {index}")

    skin = _skin_color(rng)
    canvas[hand_mask] = skin + rng.uniform(-12, 12, size=(int(hand_mask.sum()), 3))
    visible_target = target_mask & ~hand_mask

    image = np.clip(canvas + rng.uniform(-3, 3, size=canvas.shape), 0, 255).astype(np.uint8)
    to_u8 = lambda m: m.astype(np.uint8) * 255
    return Scene(
        index=index,
        class_id=class_id,
        image=image,
        object_mask=to_u8(visible_target),
        hand_mask=to_u8(hand_mask),
        distractor_mask=to_u8(distractor_mask),
        target_center=(params.target_cx, params.target_cy),
        distractor_centers=distractor_centers,
        params=params,
    )


def generate_scenes(
    config: SceneConfig,
    n_scenes: int,
    seed: int,
    redundant: bool = False,
    class_ids: Optional[list[int]] = None,
) -> list[Scene]:
    if n_scenes < 1:
        raise ValueError("n_scenes must be >= 1")
    scenes = []
    for i in range(n_scenes):
        cid = class_ids[i] if class_ids is not None else i % len(config.classes)
        rng = np.random.default_rng([seed, i, 17])
        params = sample_params(rng, config, redundant=redundant)
        scenes.append(render_scene(config, i, seed, class_id=cid, params=params))
    return scenes


def hand_object_gap_px(scene: Scene) -> float:
    """Min pixel distance between the hand mask and the object mask (0 if they
    overlap). Generator contract says this stays <= 5."""
    obj = scene.object_mask > 0
    hand = scene.hand_mask > 0
    if (obj & hand).any():
        return 0.0
    dist_to_obj = ndimage.distance_transform_edt(~obj)
    return float(dist_to_obj[hand].min())


def translated_hand_mask(scene: Scene, toward: tuple[float, float]) -> np.ndarray:
    """Shift the hand mask so it sits next to `toward` (a distractor center)
    instead of the target. Used by the conditioning-sensitivity check."""
    tx, ty = scene.target_center
    dx = int(round(toward[0] - tx))
    dy = int(round(toward[1] - ty))
    shifted = np.zeros_like(scene.hand_mask)
    ys, xs = np.nonzero(scene.hand_mask)
    ys2 = np.clip(ys + dy, 0, shifted.shape[0] - 1)
    xs2 = np.clip(xs + dx, 0, shifted.shape[1] - 1)
    shifted[ys2, xs2] = 255
    return shifted


# --- on-disk dataset ---------------------------------------------------------

def write_dataset(scenes: list[Scene], out_dir: str | Path, config: SceneConfig) -> DatasetManifest:
    """Write scenes as a HuTics-shaped dataset: PNGs plus manifest.json and a
    scenes.json ground-truth sidecar. Participants are synthetic, 12 images
    each; gesture tags cycle through the four kinds."""
    out = Path(out_dir)
    records = []
    gt = []
    for scene in scenes:
        stem = f"{scene.index:05d}"
        image_rel = f"images/{stem}.png"
        obj_rel = f"object_masks/{stem}.png"
        hand_rel = f"hand_masks/{stem}.png"
        distr_rel = f"distractor_masks/{stem}.png"
        save_png(scene.image, out / image_rel)
        save_png(scene.object_mask, out / obj_rel)
        save_png(scene.hand_mask, out / hand_rel)
        save_png(scene.distractor_mask, out / distr_rel)
        records.append(
            ManifestRecord(
                participant_id=f"p{scene.index // IMAGES_PER_PARTICIPANT:04d}",
                gesture_type=GESTURE_CYCLE[scene.index % len(GESTURE_CYCLE)],
                image=image_rel,
                object_mask=obj_rel,
                hand_mask=hand_rel,
            )
        )
        gt.append(
            {
                "index": scene.index,
                "class_id": scene.class_id,
                "class_name": config.classes[scene.class_id].name,
                "image": image_rel,
                "distractor_mask": distr_rel,
                "target_center": list(scene.target_center),
                "distractor_centers": [list(c) for c in scene.distractor_centers],
                "params": asdict(scene.params) if scene.params else None,
            }
        )
    manifest = DatasetManifest(root=out, records=records)
    save_manifest(manifest)
    (out / "scenes.json").write_text(json.dumps({"scenes": gt}, indent=2))
    return manifest


def generate_synthetic(
    n_scenes: int,
    seed: int,
    spurious_cue: bool = False,
    out_dir: str | Path = None,
    style: str = "paired",
) -> tuple[DatasetManifest, list[Scene]]:
    """Generate a full synthetic dataset on disk; returns (manifest, scenes)."""
    if style == "paired":
        config = scene_config_segmentation()
    elif style == "neutral":
        config = scene_config_classification(spurious_cue=spurious_cue)
    else:
        raise ValueError(f"unknown style: {style}")
    if spurious_cue and style == "paired":
        config = SceneConfig(
            classes=config.classes, size=config.size,
            distractor_style=config.distractor_style, spurious_cue=True,
        )
    scenes = generate_scenes(config, n_scenes, seed)
    if out_dir is None:
        raise ValueError("out_dir is required to build a manifest")
    manifest = write_dataset(scenes, out_dir, config)
    return manifest, scenes
