"""Reading and writing 8-bit rasters.

Pixels are quantized to 8 bits only here; everything in between works on
float arrays in [0, 1].
"""

from __future__ import annotations

import io
import os
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError


def _open(path):
    try:
        im = Image.open(path)
        im.load()
    except FileNotFoundError:
        raise
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise DecodeError(f"{path}: {exc}") from exc
    return im


def to_uint8(arr) -> np.ndarray:
    return np.round(np.clip(np.asarray(arr, dtype=np.float64), 0.0, 1.0) * 255.0).astype(np.uint8)


def read_image(path) -> np.ndarray:
    """Load an RGB raster as a float64 ``(H, W, 3)`` array in [0, 1].

    Grayscale files are expanded to three channels; an alpha channel is
    rejected because compositing must go through an explicit mask.
    """
    im = _open(path)
    if im.mode in ("RGBA", "LA", "PA") or (im.mode == "P" and "transparency" in im.info):
        raise DecodeError(f"{path}: images with alpha are not supported, supply a mask instead")
    if im.mode not in ("RGB", "L", "P", "1"):
        raise DecodeError(f"{path}: unsupported image mode {im.mode!r}")
    return np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0


def encode_png(arr) -> bytes:
    """PNG bytes for an ``(H, W, 3)`` image or ``(H, W)`` mask in [0, 1]."""
    data = to_uint8(arr)
    mode = "RGB" if data.ndim == 3 else "L"
    buf = io.BytesIO()
    Image.fromarray(data, mode=mode).save(buf, format="PNG")
    return buf.getvalue()


def write_png(path, arr) -> bytes:
    """Write ``arr`` as PNG and return the encoded bytes (for hashing)."""
    payload = encode_png(arr)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".part")
    with open(tmp, "wb") as fh:
        fh.write(payload)
    os.replace(tmp, path)
    return payload


write_image = write_png


def read_gray(path) -> np.ndarray:
    """Read a single-channel raster as float64 ``(H, W)`` in [0, 1]."""
    im = _open(path)
    if im.mode == "1":
        im = im.convert("L")
    if im.mode == "L":
        return np.asarray(im, dtype=np.float64) / 255.0
    if im.mode in ("I", "I;16", "I;16B", "I;16L"):
        data = np.asarray(im, dtype=np.int64)
        if data.min() < 0 or data.max() > 255:
            raise DecodeError(f"{path}: mask values outside 0..255")
        return data.astype(np.float64) / 255.0
    raise DecodeError(f"{path}: mask must be a single-channel image, got mode {im.mode!r}")
