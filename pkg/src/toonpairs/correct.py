"""Input color correction in Lab space.

The stylized head is shifted by the difference between the mean facial
color of the source photo and that of the stylized head, so the subject's
skin tone survives stylization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .color import LabColor, check_image, image_to_lab, lab_to_image
from .errors import ConfigError, DimensionMismatch, EmptyRegion
from .masks import check_mask

CHANNELS = ("L", "a", "b")
REGIONS = ("whole_image", "masked_head")


@dataclass(frozen=True)
class RegionStats:
    mean: LabColor
    pixel_weight: float
    region_id: str = "source_face"


@dataclass(frozen=True)
class CorrectionParams:
    apply_region: str = "whole_image"
    channels: tuple = field(default=CHANNELS)

    def __post_init__(self):
        if self.apply_region not in REGIONS:
            raise ConfigError(f"apply_region must be one of {REGIONS}, got {self.apply_region!r}")
        chans = tuple(self.channels)
        if not chans or any(c not in CHANNELS for c in chans) or len(set(chans)) != len(chans):
            raise ConfigError(f"channels must be a non-empty subset of {CHANNELS}, got {self.channels!r}")
        object.__setattr__(self, "channels", tuple(c for c in CHANNELS if c in chans))


def masked_mean_lab(img, mask, region_id="source_face") -> RegionStats:
    """Mask-weighted mean Lab color of ``img``."""
    img = check_image(img)
    w = check_mask(mask, img.shape)
    total = float(w.sum())
    if not total > 0.0:
        raise EmptyRegion(f"{region_id}: mask selects no pixels")
    lab = image_to_lab(img)
    mean = (lab * w[..., None]).sum(axis=(0, 1)) / total
    return RegionStats(LabColor(*map(float, mean)), total, region_id)


def correction_delta(src_stats: RegionStats, tgt_stats: RegionStats, channels=CHANNELS) -> np.ndarray:
    """``src_mean - tgt_mean`` with unselected channels zeroed."""
    delta = np.subtract(src_stats.mean, tgt_stats.mean)
    keep = np.array([c in channels for c in CHANNELS])
    return np.where(keep, delta, 0.0)


def correct_color(head_styled, src_stats, tgt_stats, params: CorrectionParams, mask) -> np.ndarray:
    """Add the mean-color difference to every selected Lab channel.

    With ``apply_region="masked_head"`` the shift is weighted by the mask
    and pixels with zero weight are returned untouched. Results leaving the
    sRGB gamut are clamped per channel after conversion back.
    """
    head = check_image(head_styled)
    m = check_mask(mask, head.shape)
    delta = correction_delta(src_stats, tgt_stats, params.channels)
    if not np.any(delta):
        return head.copy()
    lab = image_to_lab(head)
    if params.apply_region == "whole_image":
        return lab_to_image(lab + delta)
    shifted = lab_to_image(lab + delta * m[..., None])
    return np.where(m[..., None] > 0.0, shifted, head)


def reflect_input_color(source, head_styled, mask, params=None, stats_mask=None):
    """Measure both means and apply the correction in one call.

    Returns ``(corrected, delta, src_stats, tgt_stats)``. ``stats_mask``
    defaults to ``mask``; pass a tighter skin mask when one is available.
    """
    if params is None:
        params = CorrectionParams()
    source = check_image(source)
    head = check_image(head_styled)
    if source.shape != head.shape:
        raise DimensionMismatch(f"source {source.shape} and head {head.shape} differ in size")
    sm = mask if stats_mask is None else stats_mask
    src_stats = masked_mean_lab(source, sm, "source_face")
    tgt_stats = masked_mean_lab(head, sm, "target_face")
    corrected = correct_color(head, src_stats, tgt_stats, params, mask)
    return corrected, correction_delta(src_stats, tgt_stats, params.channels), src_stats, tgt_stats
