"""Full-body aware composition of a stylized head over a stylized background."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .color import check_image, srgb_decode, srgb_encode
from .errors import DimensionMismatch
from .masks import check_mask, feather


@dataclass
class CompositionInputs:
    head_styled: np.ndarray
    background_styled: np.ndarray
    mask: np.ndarray
    feather_radius: int = 3
    linear_blend: bool = False


def blend(head, background, weight):
    """``head * w + background * (1 - w)`` with exact endpoints.

    Pixels with weight 0 or 1 copy the corresponding input bit for bit,
    pixels where both inputs agree keep that value, and every result is
    clipped into the interval spanned by the two inputs.
    """
    w = weight[..., None]
    out = head * w + background * (1.0 - w)
    out = np.clip(out, np.minimum(head, background), np.maximum(head, background))
    out = np.where(w >= 1.0, head, out)
    out = np.where(w <= 0.0, background, out)
    return np.where(head == background, head, out)


def compose_fullbody(inp: CompositionInputs) -> np.ndarray:
    """Combine ``head_styled`` (under the mask) with ``background_styled``.

    The mask is feathered by ``feather_radius`` first; radius 0 gives a hard
    composite. Blending happens on the stored sRGB values unless
    ``linear_blend`` is set.
    """
    head = check_image(inp.head_styled)
    bg = check_image(inp.background_styled)
    if head.shape != bg.shape:
        raise DimensionMismatch(f"head {head.shape} and background {bg.shape} differ in size")
    mask = check_mask(inp.mask, head.shape)
    weight = feather(mask, inp.feather_radius)
    if not inp.linear_blend:
        return blend(head, bg, weight)
    mixed = blend(srgb_decode(head), srgb_decode(bg), weight)
    out = srgb_encode(mixed)
    # keep the exact-endpoint guarantee through the round trip
    out = np.where(weight[..., None] >= 1.0, head, out)
    return np.where(weight[..., None] <= 0.0, bg, out)


def compose(head, background, mask, feather_radius=3, linear_blend=False) -> np.ndarray:
    """Shorthand for :func:`compose_fullbody` without building the inputs object."""
    return compose_fullbody(CompositionInputs(head, background, mask, feather_radius, linear_blend))
