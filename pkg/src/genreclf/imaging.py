"""Rendering spectrogram matrices to fixed-size RGB images.

Rendering is fully deterministic: per-image min-max normalization, a frozen
256-entry colormap, and an in-repo bilinear resize, so identical input
matrices produce bit-identical images on any machine.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .colormap import VIRIDIS_256

IMAGE_SIZE = 224


@dataclass
class SpectroImage:
    pixels: np.ndarray  # (224, 224, 3), each channel in [0, 1]
    kind: str           # "stft" or "mel"


def _bilinear_resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Channel-wise bilinear resize with half-pixel-center sampling."""
    in_h, in_w = img.shape[:2]
    ys = (np.arange(out_h) + 0.5) * in_h / out_h - 0.5
    xs = (np.arange(out_w) + 0.5) * in_w / out_w - 0.5
    y0 = np.clip(np.floor(ys), 0, in_h - 1).astype(np.int64)
    x0 = np.clip(np.floor(xs), 0, in_w - 1).astype(np.int64)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = np.clip(ys - y0, 0.0, 1.0)[:, None, None]
    wx = np.clip(xs - x0, 0.0, 1.0)[None, :, None]

    top = img[y0][:, x0] * (1 - wx) + img[y0][:, x1] * wx
    bot = img[y1][:, x0] * (1 - wx) + img[y1][:, x1] * wx
    return top * (1 - wy) + bot * wy


def _apply_colormap(values: np.ndarray) -> np.ndarray:
    """Map [0, 1] values to RGB by linear interpolation in the frozen table."""
    pos = values * (len(VIRIDIS_256) - 1)
    lo = np.floor(pos).astype(np.int64)
    hi = np.minimum(lo + 1, len(VIRIDIS_256) - 1)
    frac = (pos - lo)[..., None]
    return VIRIDIS_256[lo] * (1 - frac) + VIRIDIS_256[hi] * frac


def render_image(values: np.ndarray, kind: str = "mel") -> SpectroImage:
    """Render a time-frequency matrix to a 224x224x3 image.

    Values are min-max normalized per image (a constant matrix maps to the
    colormap midpoint), row 0 of the matrix ends up at the bottom of the
    image, and no axes, ticks, or margins are drawn.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError("matrix contains non-finite values")

    lo, hi = values.min(), values.max()
    if hi > lo:
        norm = (values - lo) / (hi - lo)
    else:
        norm = np.full_like(values, 0.5)

    rgb = _apply_colormap(norm[::-1])  # flip so low frequencies sit at the bottom
    pixels = _bilinear_resize(rgb, IMAGE_SIZE, IMAGE_SIZE)
    return SpectroImage(np.clip(pixels, 0.0, 1.0), kind)


def save_png(image: SpectroImage, path) -> None:
    """Persist as 8-bit RGB PNG (round(v*255) quantization)."""
    arr = np.rint(image.pixels * 255.0).astype(np.uint8)
    Image.fromarray(arr, mode="RGB").save(path, format="PNG")


def load_png(path) -> np.ndarray:
    """Load a PNG as a float array (3, H, W) with channels in [0, 1]."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    return arr.transpose(2, 0, 1)


# --- raw log-mel persistence -------------------------------------------------

_LMEL_MAGIC = b"LMEL"


def save_lmel(values: np.ndarray, path) -> None:
    """Write a log-mel matrix as little-endian float32 with a 16-byte header."""
    values = np.asarray(values)
    n_mels, n_frames = values.shape
    with open(path, "wb") as f:
        f.write(_LMEL_MAGIC)
        f.write(struct.pack("<III", n_mels, n_frames, 0))
        f.write(values.astype("<f4").tobytes())


def load_lmel(path) -> np.ndarray:
    with open(path, "rb") as f:
        header = f.read(16)
        if len(header) != 16 or header[:4] != _LMEL_MAGIC:
            raise ValueError(f"{path}: not an LMEL file")
        n_mels, n_frames, _ = struct.unpack("<III", header[4:])
        data = np.frombuffer(f.read(), dtype="<f4")
    if data.size != n_mels * n_frames:
        raise ValueError(f"{path}: payload size does not match header")
    return data.reshape(n_mels, n_frames).astype(np.float64)
