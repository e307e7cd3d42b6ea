"""CutFace augmentation: paste k faces onto a stylized landscape without overlap."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from PIL import Image

from .color import check_image
from .errors import DimensionMismatch, PlacementInfeasible
from .masks import bounding_box, check_mask
from .synthesis import compose


@dataclass(frozen=True)
class PlacementRect:
    x: int
    y: int
    w: int
    h: int
    face_index: int

    def intersection_area(self, other: "PlacementRect") -> int:
        dx = min(self.x + self.w, other.x + other.w) - max(self.x, other.x)
        dy = min(self.y + self.h, other.y + other.h) - max(self.y, other.y)
        return max(dx, 0) * max(dy, 0)


@dataclass
class CutFaceLayout:
    canvas: tuple  # (height, width)
    placements: list = field(default_factory=list)
    seed: int = 0
    k_requested: int = 0
    attempts_used: int = 0

    def to_dict(self) -> dict:
        return {
            "canvas": {"height": int(self.canvas[0]), "width": int(self.canvas[1])},
            "placements": [asdict(p) for p in self.placements],
            "seed": int(self.seed),
            "k_requested": int(self.k_requested),
            "attempts_used": int(self.attempts_used),
        }


def _fits(rect, canvas):
    h, w = canvas
    return rect.x >= 0 and rect.y >= 0 and rect.x + rect.w <= w and rect.y + rect.h <= h


def plan_cutface(canvas, face_dims, k, seed, max_attempts=100, max_restarts=10) -> CutFaceLayout:
    """Choose top-left corners for the first ``k`` faces by rejection sampling.

    Corners are drawn uniformly from the positions that keep each face
    inside the canvas; a draw overlapping an earlier face is rejected.
    When one face exhausts ``max_attempts`` the whole layout restarts,
    at most ``max_restarts`` times.

    Args:
        canvas: ``(height, width)`` of the landscape.
        face_dims: ``(height, width)`` of each candidate face, in paste order.
        k: number of faces to place.
        seed: integer seed; equal inputs and seed give an equal layout.

    Raises:
        PlacementInfeasible: no valid layout was found.
    """
    H, W = int(canvas[0]), int(canvas[1])
    k = int(k)
    if k < 0 or k > len(face_dims):
        raise ValueError(f"k={k} must lie in [0, {len(face_dims)}]")
    if max_attempts < 1 or max_restarts < 0:
        raise ValueError("max_attempts must be >= 1 and max_restarts >= 0")
    dims = [(int(h), int(w)) for h, w in face_dims[:k]]
    if any(h < 1 or w < 1 for h, w in dims):
        raise ValueError("face dimensions must be positive")

    layout = CutFaceLayout((H, W), [], int(seed), k, 0)
    if k == 0:
        return layout
    for i, (h, w) in enumerate(dims):
        if h > H or w > W:
            raise PlacementInfeasible(f"face {i} ({w}x{h}) is larger than the {W}x{H} canvas")
    if sum(h * w for h, w in dims) > H * W:
        raise PlacementInfeasible("total face area exceeds the canvas area")

    rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
    attempts = 0
    for _ in range(max_restarts + 1):
        placed: list[PlacementRect] = []
        for i, (h, w) in enumerate(dims):
            for _ in range(max_attempts):
                attempts += 1
                x = int(rng.integers(0, W - w + 1))
                y = int(rng.integers(0, H - h + 1))
                rect = PlacementRect(x, y, w, h, i)
                if all(rect.intersection_area(p) == 0 for p in placed):
                    placed.append(rect)
                    break
            else:
                break
        if len(placed) == k:
            layout.placements = placed
            layout.attempts_used = attempts
            return layout
    raise PlacementInfeasible(
        f"could not place {k} faces on a {W}x{H} canvas in {attempts} attempts"
    )


def check_layout(layout: CutFaceLayout) -> None:
    """Raise ``AssertionError`` if the layout breaks any geometric invariant."""
    ps = layout.placements
    assert len(ps) == layout.k_requested
    for p in ps:
        assert p.w >= 1 and p.h >= 1 and _fits(p, layout.canvas), p
    for i in range(len(ps)):
        for j in range(i + 1, len(ps)):
            assert ps[i].intersection_area(ps[j]) == 0, (ps[i], ps[j])


def _paste(canvas_img, faces, layout, feather_radius):
    out = check_image(canvas_img).copy()
    if out.shape[:2] != tuple(layout.canvas):
        raise DimensionMismatch(f"landscape {out.shape[:2]} does not match layout canvas {layout.canvas}")
    union = np.zeros(out.shape[:2])
    for p in layout.placements:
        img, mask = faces[p.face_index]
        img = check_image(img)
        mask = check_mask(mask, img.shape)
        if img.shape[:2] != (p.h, p.w):
            raise DimensionMismatch(
                f"face {p.face_index} is {img.shape[1]}x{img.shape[0]}, placement expects {p.w}x{p.h}"
            )
        window = (slice(p.y, p.y + p.h), slice(p.x, p.x + p.w))
        out[window] = compose(img, out[window], mask, feather_radius)
        union[window] = np.maximum(union[window], mask)
    return out, union


def apply_cutface(landscape_styled, faces, layout: CutFaceLayout, feather_radius=0):
    """Paste stylized faces onto ``landscape_styled`` at the layout's rectangles.

    ``faces`` is a list of ``(image, mask)`` pairs indexed by
    ``PlacementRect.face_index``. Returns the augmented image and the union
    of the pasted head masks on the full canvas.
    """
    return _paste(landscape_styled, faces, layout, feather_radius)


def pair_cutface_source(landscape_src, source_faces, layout: CutFaceLayout, feather_radius=0):
    """Apply the same layout to the unstylized sources so the pair stays aligned."""
    return _paste(landscape_src, source_faces, layout, feather_radius)[0]


# -- face crops -----------------------------------------------------------------


def crop_to_mask(mask, *images):
    """Crop ``images`` and ``mask`` to the mask's bounding box."""
    box = bounding_box(mask)
    if box is None:
        raise ValueError("mask is empty")
    y0, y1, x0, x1 = box
    return (mask[y0:y1, x0:x1],) + tuple(img[y0:y1, x0:x1] for img in images)


def _resize_plane(plane, size):
    im = Image.fromarray(np.ascontiguousarray(plane, dtype=np.float32), mode="F")
    return np.asarray(im.resize(size, Image.BOX), dtype=np.float64)


def resize(arr, height, width):
    """Area-averaging resize of an ``(H, W)`` or ``(H, W, C)`` float array."""
    size = (int(width), int(height))
    if arr.ndim == 2:
        out = _resize_plane(arr, size)
    else:
        out = np.stack([_resize_plane(arr[..., c], size) for c in range(arr.shape[2])], axis=-1)
    return np.clip(out, 0.0, 1.0)


def scaled_dims(crop_shape, target_height, canvas):
    """Aspect-preserving ``(h, w)`` for a crop scaled to ``target_height``, capped to the canvas."""
    ch, cw = crop_shape[:2]
    H, W = canvas
    h = max(1, min(int(round(target_height)), H))
    w = max(1, int(round(cw * h / ch)))
    if w > W:
        w = W
        h = max(1, min(H, int(round(ch * w / cw))))
    return h, w
