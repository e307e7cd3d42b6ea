"""Paired photo/cartoon dataset construction for full-body portrait stylization."""

__version__ = "0.1.0"

from .backends import BackendSpec, StylizedResult, cartoonize, stylize
from .color import LabColor, image_to_lab, lab_to_image, lab_to_srgb, srgb_to_lab
from .correct import CorrectionParams, RegionStats, correct_color, masked_mean_lab, reflect_input_color
from .cutface import CutFaceLayout, PlacementRect, apply_cutface, pair_cutface_source, plan_cutface
from .masks import coverage_fraction, feather, load_mask, synthetic_head_mask
from .synthesis import CompositionInputs, compose, compose_fullbody

__all__ = [
    "BackendSpec",
    "StylizedResult",
    "stylize",
    "cartoonize",
    "LabColor",
    "srgb_to_lab",
    "lab_to_srgb",
    "image_to_lab",
    "lab_to_image",
    "load_mask",
    "synthetic_head_mask",
    "feather",
    "coverage_fraction",
    "CompositionInputs",
    "compose_fullbody",
    "compose",
    "RegionStats",
    "CorrectionParams",
    "masked_mean_lab",
    "correct_color",
    "reflect_input_color",
    "PlacementRect",
    "CutFaceLayout",
    "plan_cutface",
    "apply_cutface",
    "pair_cutface_source",
]
