"""sRGB <-> CIE L*a*b* conversion (D65 white, 2 degree observer).

Images are float arrays of shape ``(H, W, 3)`` holding nonlinear sRGB in
[0, 1]. Lab planes share the shape and hold ``(L, a, b)`` per pixel.

All conversions are written as explicit elementwise arithmetic instead of
matrix products so that a single pixel and a whole image go through the
same floating point operations and produce identical values.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch

# IEC 61966-2-1 linear sRGB -> XYZ
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_XYZ_TO_RGB = np.linalg.inv(_RGB_TO_XYZ)

_EPS = (6.0 / 29.0) ** 3
_KAPPA = 3.0 * (6.0 / 29.0) ** 2
_OFFSET = 4.0 / 29.0


class LabColor(NamedTuple):
    L: float
    a: float
    b: float


def _mat3(m, x):
    x0, x1, x2 = x[..., 0], x[..., 1], x[..., 2]
    return np.stack(
        [
            m[0, 0] * x0 + m[0, 1] * x1 + m[0, 2] * x2,
            m[1, 0] * x0 + m[1, 1] * x1 + m[1, 2] * x2,
            m[2, 0] * x0 + m[2, 1] * x1 + m[2, 2] * x2,
        ],
        axis=-1,
    )


def srgb_decode(v):
    """Nonlinear sRGB in [0, 1] to linear light."""
    v = np.asarray(v, dtype=np.float64)
    return np.where(v <= 0.04045, v / 12.92, ((np.maximum(v, 0.04045) + 0.055) / 1.055) ** 2.4)


def srgb_encode(v):
    """Linear light to nonlinear sRGB. Inputs are clipped to [0, 1] first."""
    v = np.clip(np.asarray(v, dtype=np.float64), 0.0, 1.0)
    return np.where(v <= 0.0031308, 12.92 * v, 1.055 * np.maximum(v, 0.0031308) ** (1.0 / 2.4) - 0.055)


# white point taken from the matrix itself so that r = g = b maps to a = b = 0
_WHITE = _mat3(_RGB_TO_XYZ, np.ones(3))


def _f(t):
    return np.where(t > _EPS, np.cbrt(t), t / _KAPPA + _OFFSET)


def _finv(t):
    return np.where(t > 6.0 / 29.0, t * t * t, _KAPPA * (t - _OFFSET))


def _rgb_to_lab_array(rgb):
    xyz = _mat3(_RGB_TO_XYZ, srgb_decode(rgb))
    fx = _f(xyz[..., 0] / _WHITE[0])
    fy = _f(xyz[..., 1] / _WHITE[1])
    fz = _f(xyz[..., 2] / _WHITE[2])
    return np.stack([116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)], axis=-1)


def lab_to_linear(lab):
    """Lab to *unclipped* linear sRGB; values outside [0, 1] are out of gamut."""
    lab = np.asarray(lab, dtype=np.float64)
    fy = (lab[..., 0] + 16.0) / 116.0
    fx = fy + lab[..., 1] / 500.0
    fz = fy - lab[..., 2] / 200.0
    xyz = np.stack(
        [_finv(fx) * _WHITE[0], _finv(fy) * _WHITE[1], _finv(fz) * _WHITE[2]], axis=-1
    )
    return _mat3(_XYZ_TO_RGB, xyz)


def srgb_to_lab(pixel) -> LabColor:
    """Convert one sRGB triple in [0, 1] to Lab."""
    lab = _rgb_to_lab_array(np.asarray(pixel, dtype=np.float64).reshape(3))
    return LabColor(float(lab[0]), float(lab[1]), float(lab[2]))


def lab_to_srgb(c) -> tuple[float, float, float]:
    """Convert one Lab triple to sRGB, clamping out-of-gamut channels."""
    rgb = srgb_encode(lab_to_linear(np.asarray(c, dtype=np.float64).reshape(3)))
    return float(rgb[0]), float(rgb[1]), float(rgb[2])


def check_image(img) -> np.ndarray:
    """Return ``img`` as a float64 ``(H, W, 3)`` array, validating the shape."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionMismatch(f"expected an (H, W, 3) image, got shape {arr.shape}")
    return arr


def image_to_lab(img) -> np.ndarray:
    return _rgb_to_lab_array(check_image(img))


def lab_to_image(plane) -> np.ndarray:
    """Inverse of :func:`image_to_lab`; the result is clamped to [0, 1]."""
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 3 or plane.shape[2] != 3:
        raise DimensionMismatch(f"expected an (H, W, 3) Lab plane, got shape {plane.shape}")
    return np.clip(srgb_encode(lab_to_linear(plane)), 0.0, 1.0)
