"""Head masks: loading, synthetic generation, feathering and coverage.

A mask is a float64 ``(H, W)`` array of weights in [0, 1]; 1 marks head
(face, hair and neck), 0 marks background.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from .errors import DimensionMismatch, InvalidGeometry
from .imageio import read_gray, write_png


class MaskSource(str, enum.Enum):
    FILE = "file"
    SYNTHETIC_ELLIPSE = "synthetic_ellipse"
    EXTERNAL_PARSER_OUTPUT = "external_parser_output"


def check_mask(mask, shape=None) -> np.ndarray:
    m = np.asarray(mask, dtype=np.float64)
    if m.ndim != 2 or m.size == 0:
        raise DimensionMismatch(f"expected a non-empty (H, W) mask, got shape {m.shape}")
    if shape is not None and m.shape != tuple(shape[:2]):
        raise DimensionMismatch(f"mask shape {m.shape} does not match image shape {tuple(shape[:2])}")
    if not np.all((m >= 0.0) & (m <= 1.0)):
        raise ValueError("mask values must lie in [0, 1]")
    return m


def load_mask(path, expected_shape=None) -> np.ndarray:
    """Load an 8-bit single-channel mask file (0 = background, 255 = head).

    Args:
        path: raster file.
        expected_shape: ``(height, width)`` the mask must have, or None.

    Raises:
        DimensionMismatch: the file has a different size.
        DecodeError: the file is unreadable or not single-channel.
    """
    m = read_gray(path)
    if expected_shape is not None and m.shape != tuple(expected_shape[:2]):
        raise DimensionMismatch(
            f"{path}: mask is {m.shape[1]}x{m.shape[0]}, expected {expected_shape[1]}x{expected_shape[0]}"
        )
    return m


def save_mask(path, mask) -> bytes:
    return write_png(path, check_mask(mask))


def synthetic_head_mask(width, height, center, axes, rotation=0.0) -> np.ndarray:
    """Rasterize a filled ellipse with a one pixel anti-aliased rim.

    ``center`` is ``(x, y)`` in pixel units (pixel ``(i, j)`` has its centre
    at ``(j + 0.5, i + 0.5)``), ``axes`` the two semi-axes in pixels and
    ``rotation`` the angle of the first axis in radians.
    """
    if width < 1 or height < 1:
        raise InvalidGeometry("canvas must be at least 1x1")
    cx, cy = center
    ax, ay = axes
    if not (ax > 0 and ay > 0):
        raise InvalidGeometry(f"ellipse axes must be positive, got {axes}")
    if not (0 <= cx <= width and 0 <= cy <= height):
        raise InvalidGeometry(f"center {center} lies outside the {width}x{height} canvas")

    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    dx = xx + 0.5 - cx
    dy = yy + 0.5 - cy
    cos, sin = math.cos(rotation), math.sin(rotation)
    u = (dx * cos + dy * sin) / ax
    v = (-dx * sin + dy * cos) / ay
    rho = np.sqrt(u * u + v * v)
    # first-order distance to the rim in pixels: (rho - 1) / |grad rho|
    grad = np.sqrt((u / ax) ** 2 + (v / ay) ** 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        dist = np.where(rho > 0, (rho - 1.0) * rho / np.maximum(grad, 1e-12), -np.inf)
    return np.clip(0.5 - dist, 0.0, 1.0)


def _box_1d(a, radius, axis):
    n = a.shape[axis]
    pad = [(0, 0)] * a.ndim
    pad[axis] = (radius, radius)
    p = np.pad(a, pad, mode="edge")
    c = np.cumsum(p, axis=axis)
    zero_shape = list(c.shape)
    zero_shape[axis] = 1
    c = np.concatenate([np.zeros(zero_shape), c], axis=axis)
    hi = np.take(c, np.arange(2 * radius + 1, 2 * radius + 1 + n), axis=axis)
    lo = np.take(c, np.arange(0, n), axis=axis)
    return (hi - lo) / (2 * radius + 1)


def feather(mask, radius: int) -> np.ndarray:
    """Box blur with a ``(2r+1) x (2r+1)`` window and replicated borders.

    Radius 0 returns an unchanged copy (hard compositing).
    """
    m = check_mask(mask)
    radius = int(radius)
    if radius < 0:
        raise ValueError("feather radius must be >= 0")
    if radius == 0:
        return m.copy()
    out = _box_1d(_box_1d(m, radius, 0), radius, 1)
    # constant regions must stay exactly constant despite cumsum round-off
    return np.clip(out, m.min(), m.max())


def coverage_fraction(mask) -> float:
    m = check_mask(mask)
    return float(m.sum() / m.size)


def bounding_box(mask, threshold=0.0):
    """``(y0, y1, x0, x1)`` half-open bounds of pixels above ``threshold``, or None."""
    rows = np.flatnonzero((mask > threshold).any(axis=1))
    cols = np.flatnonzero((mask > threshold).any(axis=0))
    if rows.size == 0:
        return None
    return int(rows[0]), int(rows[-1]) + 1, int(cols[0]), int(cols[-1]) + 1
