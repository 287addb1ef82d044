"""Image ingest: decode, bilinear resize, channel conversion.

These reimplement the engine's conventions (half-pixel-centered bilinear
sampling with edge clamp, replicated gray channels, ITU-R 601 luma) so
that a model exported here sees the same pixels the engine's generators
produce. Images are (H, W, C) float64 arrays in [0, 1].
"""

from __future__ import annotations

import numpy as np
from PIL import Image

LUMA_R, LUMA_G, LUMA_B = 0.299, 0.587, 0.114


def load_image(path: str) -> np.ndarray:
    """Decode one image file to float64 in [0, 1], shape (H, W, 1 or 3)."""
    try:
        with Image.open(path) as im:
            if im.mode not in ("L", "RGB"):
                im = im.convert("RGB")
            arr = np.asarray(im, dtype=np.float64) / 255.0
    except OSError as exc:
        raise ValueError(f"cannot decode image {path}: {exc}") from None
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return arr


def _lerp_axis(img: np.ndarray, new_n: int, axis: int) -> np.ndarray:
    n = img.shape[axis]
    if new_n == n:
        return img
    # half-pixel centers, clamped to the edge texels
    pos = np.clip((np.arange(new_n) + 0.5) * (n / new_n) - 0.5, 0.0, n - 1.0)
    lo = np.floor(pos).astype(int)
    hi = np.minimum(lo + 1, n - 1)
    frac = pos - lo
    shape = [1] * img.ndim
    shape[axis] = new_n
    frac = frac.reshape(shape)
    return np.take(img, lo, axis=axis) * (1.0 - frac) + np.take(img, hi, axis=axis) * frac


def resize_bilinear(image: np.ndarray, height: int, width: int) -> np.ndarray:
    """Separable bilinear resample to (height, width)."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 3:
        raise ValueError("image must be (H, W, C)")
    if height < 1 or width < 1:
        raise ValueError("target dimensions must be >= 1")
    img = _lerp_axis(img, height, axis=0)
    img = _lerp_axis(img, width, axis=1)
    return img


def to_channels(image: np.ndarray, channels: int) -> np.ndarray:
    """Convert to the requested channel count: gray is replicated to
    color, color is collapsed to luma. Same-count input passes through."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] not in (1, 3):
        raise ValueError("image must be (H, W, C) with C in {1, 3}")
    if channels not in (1, 3):
        raise ValueError("channels must be 1 or 3")
    have = img.shape[2]
    if have == channels:
        return img
    if have == 1:
        return np.repeat(img, 3, axis=2)
    y = img[:, :, 0] * LUMA_R + img[:, :, 1] * LUMA_G + img[:, :, 2] * LUMA_B
    return np.clip(y, 0.0, 1.0)[:, :, None]


def prepare(path: str, resize: tuple[int, int], channels: int) -> np.ndarray:
    """Decode, resize and channel-convert one file; returns the flat
    feature vector (H*W*C) the model consumes, row-major."""
    img = load_image(path)
    img = resize_bilinear(img, resize[0], resize[1])
    img = to_channels(img, channels)
    return img.reshape(-1)
