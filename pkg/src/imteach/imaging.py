"""Small raster helpers shared across the package: PNG io, resizing, color space."""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image


def load_png(path: str | Path) -> np.ndarray:
    """Load a PNG as uint8 array: HxWx3 for RGB images, HxW for grayscale masks."""
    with Image.open(path) as im:
        if im.mode in ("L", "I;16"):
            return np.asarray(im.convert("L"), dtype=np.uint8)
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def save_png(array: np.ndarray, path: str | Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(array).save(path, format="PNG")


def encode_png(array: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(array).save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    with Image.open(io.BytesIO(data)) as im:
        if im.mode == "L":
            return np.asarray(im, dtype=np.uint8)
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def resize_image(pixels: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinear resize of an HxWx3 uint8 image."""
    im = Image.fromarray(pixels).resize((width, height), Image.BILINEAR)
    return np.asarray(im, dtype=np.uint8)


def resize_mask_nearest(values: np.ndarray, height: int, width: int) -> np.ndarray:
    """Nearest-neighbor resize for label masks (no value mixing)."""
    im = Image.fromarray(values).resize((width, height), Image.NEAREST)
    return np.asarray(im, dtype=np.uint8)


def resize_float_bilinear(values: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinear resize of an HxW float map (probabilities, saliency)."""
    im = Image.fromarray(values.astype(np.float32), mode="F")
    out = im.resize((width, height), Image.BILINEAR)
    return np.asarray(out, dtype=np.float32)


def rgb_to_hsv(pixels: np.ndarray) -> np.ndarray:
    """Vectorized RGB(uint8) -> HSV with h, s in [0,1] and v in [0,255]."""
    rgb = pixels.astype(np.float32)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    maxc = rgb.max(axis=-1)
    minc = rgb.min(axis=-1)
    delta = maxc - minc
    safe = np.where(delta == 0, 1.0, delta)

    h = np.zeros_like(maxc)
    rmax = (maxc == r) & (delta > 0)
    gmax = (maxc == g) & (delta > 0) & ~rmax
    bmax = (delta > 0) & ~rmax & ~gmax
    h[rmax] = ((g - b)[rmax] / safe[rmax]) % 6.0
    h[gmax] = (b - r)[gmax] / safe[gmax] + 2.0
    h[bmax] = (r - g)[bmax] / safe[bmax] + 4.0
    h /= 6.0

    s = np.where(maxc == 0, 0.0, delta / np.where(maxc == 0, 1.0, maxc))
    return np.stack([h, s, maxc], axis=-1)
