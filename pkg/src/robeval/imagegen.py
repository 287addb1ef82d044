"""Deterministic generators for the unrecognisable-image datasets, plus
the ingest-time image operations (bilinear resize, channel conversion).

Images are (H, W, C) float64 arrays with values in [0, 1], C either 1
or 3. All randomness flows through numpy Philox streams keyed by
(master_seed << 64) | ordinal, so any single image can be regenerated in
isolation and parallel generation is byte-identical to serial.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from PIL import Image
from scipy.ndimage import gaussian_filter

from .util import worker_count

KINDS = ("phase", "scramble", "blobs", "uniform")

# Blob procedure constants from the originally released implementation:
# Bernoulli density, blur width, and the zero threshold.
BLOB_DENSITY = 0.7
BLOB_SIGMA = 1.5
BLOB_THRESHOLD = 0.75

GRAY_WEIGHTS = (0.299, 0.587, 0.114)  # ITU-R 601 luma


def stream(master_seed: int, ordinal: int) -> np.random.Generator:
    """Independent generator for one image, keyed not counted, so streams
    never overlap and generation order is irrelevant."""
    master_seed = int(master_seed)
    ordinal = int(ordinal)
    if not 0 <= master_seed < 2**64:
        raise ValueError("master_seed must fit in 64 bits")
    if ordinal < 0:
        raise ValueError("ordinal must be non-negative")
    return np.random.Generator(np.random.Philox(key=(master_seed << 64) | ordinal))


def validate_image(image) -> np.ndarray:
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise ValueError(f"image must be (H, W, C) with C in {{1, 3}}, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("image dimensions must be >= 1")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image values must be finite")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("image values must lie in [0, 1]")
    return arr


def _check_dims(height, width, channels):
    if height < 1 or width < 1:
        raise ValueError("image dimensions must be >= 1")
    if channels not in (1, 3):
        raise ValueError("channels must be 1 or 3")


def random_phase_field(height: int, width: int, rng: np.random.Generator) -> np.ndarray:
    """Hermitian-symmetric random phase field.

    Antisymmetrizing one uniform field gives phi(-u,-v) = -phi(u,v)
    exactly and zeroes the self-conjugate bins (DC and Nyquist), so
    magnitude * exp(i phi) inverts to a real image. Differences of
    uniforms stay uniform mod 2 pi.
    """
    phi = rng.uniform(-np.pi, np.pi, size=(height, width))
    mirrored = np.roll(phi[::-1, ::-1], (1, 1), axis=(0, 1))  # phi at (-u, -v)
    return phi - mirrored


def apply_phase(image: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Swap in the phase field, keeping per-channel magnitudes; returns the
    complex inverse transform so callers can check the imaginary residue."""
    spec = np.fft.fft2(image, axes=(0, 1))
    mixed = np.abs(spec) * np.exp(1j * phi)[:, :, None]
    return np.fft.ifft2(mixed, axes=(0, 1))


def phase_randomize(image, rng: np.random.Generator) -> np.ndarray:
    """Randomize the Fourier phase of each channel with one shared field.

    Magnitudes are preserved up to the final clip back to [0, 1]; an
    image with only DC energy comes back unchanged because the DC phase
    is pinned to zero.
    """
    img = validate_image(image)
    phi = random_phase_field(img.shape[0], img.shape[1], rng)
    return np.clip(apply_phase(img, phi).real, 0.0, 1.0)


def fisher_yates(n: int, rng: np.random.Generator) -> np.ndarray:
    """Explicit descending-index Fisher-Yates; the draw sequence
    j = integers(0, i+1) for i = n-1 .. 1 is part of the contract."""
    perm = np.arange(n)
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def pixel_scramble(image, rng: np.random.Generator) -> np.ndarray:
    """One uniform permutation of spatial positions, shared by all
    channels, so full color pixels move together."""
    img = validate_image(image)
    h, w, c = img.shape
    perm = fisher_yates(h * w, rng)
    return img.reshape(h * w, c)[perm].reshape(h, w, c)


def blobs(
    height: int,
    width: int,
    channels: int,
    rng: np.random.Generator,
    density: float = BLOB_DENSITY,
    sigma: float = BLOB_SIGMA,
    threshold: float = BLOB_THRESHOLD,
) -> np.ndarray:
    """Random blob image: Bernoulli field, Gaussian blur, zero the faint
    values, clip."""
    _check_dims(height, width, channels)
    field = (rng.random((height, width, channels)) < density).astype(np.float64)
    radius = int(np.ceil(3.0 * sigma))
    out = gaussian_filter(
        field, sigma=(sigma, sigma, 0.0), radius=(radius, radius, 0), mode="reflect"
    )
    out[out < threshold] = 0.0
    return np.clip(out, 0.0, 1.0)


def uniform_noise(height: int, width: int, channels: int, rng: np.random.Generator) -> np.ndarray:
    """I.i.d. Uniform[0, 1) values."""
    _check_dims(height, width, channels)
    return rng.random((height, width, channels))


def resize_bilinear(image, new_height: int, new_width: int) -> np.ndarray:
    """Bilinear resample with half-pixel-centered source coordinates,
    edge-clamped; never leaves the convex hull of the input values."""
    img = validate_image(image)
    h, w, _ = img.shape
    if new_height < 1 or new_width < 1:
        raise ValueError("target dimensions must be >= 1")
    if (new_height, new_width) == (h, w):
        return img.copy()
    ys = np.clip((np.arange(new_height) + 0.5) * (h / new_height) - 0.5, 0.0, h - 1.0)
    xs = np.clip((np.arange(new_width) + 0.5) * (w / new_width) - 0.5, 0.0, w - 1.0)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0)[:, None, None]
    wx = (xs - x0)[None, :, None]
    top = img[y0][:, x0] * (1.0 - wx) + img[y0][:, x1] * wx
    bot = img[y1][:, x0] * (1.0 - wx) + img[y1][:, x1] * wx
    return top * (1.0 - wy) + bot * wy


def gray_to_color(image) -> np.ndarray:
    """Replicate the single channel three times."""
    img = validate_image(image)
    if img.shape[2] != 1:
        raise ValueError("gray_to_color expects a 1-channel image")
    return np.repeat(img, 3, axis=2)


def color_to_gray(image) -> np.ndarray:
    """ITU-R 601 luma: 0.299 R + 0.587 G + 0.114 B."""
    img = validate_image(image)
    if img.shape[2] != 3:
        raise ValueError("color_to_gray expects a 3-channel image")
    gray = img @ np.asarray(GRAY_WEIGHTS)
    return np.clip(gray, 0.0, 1.0)[:, :, None]


def image_to_bytes(image) -> np.ndarray:
    """8-bit quantization: round(v * 255), clamped."""
    img = validate_image(image)
    return np.clip(np.round(img * 255.0), 0.0, 255.0).astype(np.uint8)


def bytes_to_image(arr) -> np.ndarray:
    out = np.asarray(arr, dtype=np.float64) / 255.0
    if out.ndim == 2:
        out = out[:, :, None]
    return out


def write_png(path: str, image) -> None:
    img8 = image_to_bytes(image)
    if img8.shape[2] == 1:
        pil = Image.fromarray(img8[:, :, 0], mode="L")
    else:
        pil = Image.fromarray(img8, mode="RGB")
    pil.save(path, format="PNG")


def read_png(path: str) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB")
        arr = np.asarray(im, dtype=np.uint8)
    return bytes_to_image(arr)


def ordinal_name(ordinal: int) -> str:
    return f"{ordinal:06d}.png"


def generate_dataset(
    kind: str,
    out_dir: str,
    seed: int,
    source_dir: str | None = None,
    shape: tuple[int, int, int] | None = None,
    count: int | None = None,
    name: str | None = None,
) -> dict:
    """Write one 8-bit PNG per ordinal plus a manifest fragment tagging
    the dataset unrecognisable.

    phase and scramble transform the images found in source_dir (sorted
    by filename, one output per input); blobs and uniform synthesize
    count images of the given (H, W, C) shape. Every image depends only
    on (seed, ordinal), so reruns and parallel runs are byte-identical.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    if kind in ("phase", "scramble"):
        if source_dir is None:
            raise ValueError(f"{kind} needs a source directory")
        paths = sorted(
            os.path.join(source_dir, f)
            for f in os.listdir(source_dir)
            if f.lower().endswith(".png")
        )
        if not paths:
            raise ValueError(f"no .png images in {source_dir}")
        n = len(paths)

        def make(ordinal: int) -> np.ndarray:
            img = read_png(paths[ordinal])
            rng = stream(seed, ordinal)
            if kind == "phase":
                return phase_randomize(img, rng)
            return pixel_scramble(img, rng)

    else:
        if shape is None or count is None:
            raise ValueError(f"{kind} needs a shape and a count")
        h, w, c = shape
        _check_dims(h, w, c)
        if count < 1:
            raise ValueError("count must be >= 1")
        n = int(count)

        def make(ordinal: int) -> np.ndarray:
            rng = stream(seed, ordinal)
            if kind == "blobs":
                return blobs(h, w, c, rng)
            return uniform_noise(h, w, c, rng)

    os.makedirs(out_dir, exist_ok=True)
    workers = worker_count(n)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            images = list(pool.map(make, range(n)))
    else:
        images = [make(i) for i in range(n)]
    for ordinal, img in enumerate(images):
        write_png(os.path.join(out_dir, ordinal_name(ordinal)), img)

    fragment = {
        "name": name or kind,
        "type": "unrecognisable",
        "count": n,
        "seed": int(seed),
    }
    with open(os.path.join(out_dir, "fragment.json"), "w", encoding="utf-8") as fh:
        json.dump(fragment, fh, indent=2)
        fh.write("\n")
    return fragment
