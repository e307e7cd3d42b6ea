import numpy as np
import pytest

from toonpairs.cutface import (
    CutFaceLayout,
    PlacementRect,
    apply_cutface,
    check_layout,
    crop_to_mask,
    pair_cutface_source,
    plan_cutface,
    resize,
    scaled_dims,
)
from toonpairs.errors import DimensionMismatch, PlacementInfeasible


def occupancy_ok(layout):
    """Independent check: paint every rectangle on a counter grid."""
    H, W = layout.canvas
    grid = np.zeros((H + 1, W + 1), dtype=int)
    for p in layout.placements:
        if p.x < 0 or p.y < 0 or p.x + p.w > W or p.y + p.h > H:
            return False
        grid[p.y : p.y + p.h, p.x : p.x + p.w] += 1
    return grid.max() <= 1 and grid[H].sum() == 0 and grid[:, W].sum() == 0


def random_instance(rng):
    H, W = int(rng.integers(8, 80)), int(rng.integers(8, 80))
    n = int(rng.integers(1, 6))
    faces = [(int(rng.integers(1, H // 2 + 2)), int(rng.integers(1, W // 2 + 2))) for _ in range(n)]
    k = int(rng.integers(0, min(4, n) + 1))
    return (H, W), faces, k, int(rng.integers(0, 2**63))


def test_k_zero_is_empty():
    layout = plan_cutface((10, 10), [(3, 3)], 0, seed=1)
    assert layout.placements == [] and layout.k_requested == 0


def test_face_filling_canvas_is_forced():
    layout = plan_cutface((12, 9), [(12, 9)], 1, seed=99)
    assert layout.placements == [PlacementRect(0, 0, 9, 12, 0)]


def test_area_bound_infeasible():
    with pytest.raises(PlacementInfeasible):
        plan_cutface((10, 10), [(6, 10), (6, 10)], 2, seed=0)


def test_face_larger_than_canvas():
    with pytest.raises(PlacementInfeasible):
        plan_cutface((10, 10), [(11, 2)], 1, seed=0)


def test_k_out_of_range():
    with pytest.raises(ValueError):
        plan_cutface((10, 10), [(2, 2)], 2, seed=0)


def test_random_instances_never_overlap():
    rng = np.random.default_rng(2024)
    placed = infeasible = 0
    for _ in range(1000):
        canvas, faces, k, seed = random_instance(rng)
        try:
            layout = plan_cutface(canvas, faces, k, seed)
        except PlacementInfeasible:
            infeasible += 1
            continue
        placed += 1
        assert len(layout.placements) == k
        assert occupancy_ok(layout)
        check_layout(layout)
    assert placed > 800


def test_determinism_and_prefix_feasibility():
    rng = np.random.default_rng(7)
    for _ in range(200):
        canvas, faces, k, seed = random_instance(rng)
        try:
            a = plan_cutface(canvas, faces, k, seed)
        except PlacementInfeasible:
            continue
        assert plan_cutface(canvas, faces, k, seed).to_dict() == a.to_dict()
        for j in range(k):
            plan_cutface(canvas, faces, j, seed)


def _face(h, w, value, mask_value=1.0):
    return np.full((h, w, 3), value), np.full((h, w), mask_value)


def test_apply_empty_layout(rng):
    land = rng.random((10, 12, 3))
    out, union = apply_cutface(land, [], CutFaceLayout((10, 12)))
    assert out.tobytes() == land.tobytes()
    assert not union.any()


def test_apply_full_canvas_face(rng):
    land = rng.random((10, 12, 3))
    face = rng.random((10, 12, 3))
    layout = plan_cutface((10, 12), [(10, 12)], 1, seed=3)
    out, union = apply_cutface(land, [(face, np.ones((10, 12)))], layout)
    assert np.array_equal(out, face) and np.all(union == 1)


def test_two_faces_leave_rest_of_landscape(rng):
    land = rng.random((40, 50, 3))
    faces = [(rng.random((8, 6, 3)), (rng.random((8, 6)) > 0.3).astype(float)),
             (rng.random((10, 9, 3)), np.ones((10, 9)))]
    layout = plan_cutface((40, 50), [(8, 6), (10, 9)], 2, seed=11)
    src_faces = [(rng.random(f.shape), m) for f, m in faces]
    out, union = apply_cutface(land, faces, layout)
    src = pair_cutface_source(land, src_faces, layout)
    inside = np.zeros((40, 50), bool)
    for p in layout.placements:
        inside[p.y : p.y + p.h, p.x : p.x + p.w] = True
        f, m = faces[p.face_index]
        window = out[p.y : p.y + p.h, p.x : p.x + p.w]
        assert np.array_equal(window[m == 1], f[m == 1])
        assert np.array_equal(union[p.y : p.y + p.h, p.x : p.x + p.w], m)
        sf = src_faces[p.face_index][0]
        assert np.array_equal(src[p.y : p.y + p.h, p.x : p.x + p.w][m == 1], sf[m == 1])
    assert np.array_equal(out[~inside], land[~inside])
    assert np.array_equal(src[~inside], land[~inside])
    assert not union[~inside].any()


def test_source_pairing_empty_and_full(rng):
    land = rng.random((6, 6, 3))
    assert pair_cutface_source(land, [], CutFaceLayout((6, 6))).tobytes() == land.tobytes()
    face = rng.random((6, 6, 3))
    layout = plan_cutface((6, 6), [(6, 6)], 1, 0)
    assert np.array_equal(pair_cutface_source(land, [(face, np.ones((6, 6)))], layout), face)


def test_apply_dimension_checks(rng):
    layout = plan_cutface((20, 20), [(5, 5)], 1, 0)
    with pytest.raises(DimensionMismatch):
        apply_cutface(rng.random((20, 21, 3)), [_face(5, 5, 0.5)], layout)
    with pytest.raises(DimensionMismatch):
        apply_cutface(rng.random((20, 20, 3)), [_face(5, 6, 0.5)], layout)


def test_crop_and_resize():
    mask = np.zeros((20, 30))
    mask[4:14, 10:15] = 1
    img = np.random.default_rng(0).random((20, 30, 3))
    m, c = crop_to_mask(mask, img)
    assert m.shape == (10, 5) and c.shape == (10, 5, 3)
    small = resize(np.full((10, 8, 3), 0.6), 5, 4)
    np.testing.assert_allclose(small, 0.6, atol=1e-6)
    # area averaging: 2x2 blocks of a checkerboard become flat gray
    checker = (np.indices((8, 8)).sum(axis=0) % 2).astype(float)
    np.testing.assert_allclose(resize(checker, 4, 4), 0.5, atol=1e-6)


@pytest.mark.parametrize(
    "crop, target, canvas, expected",
    [((40, 20), 20, (100, 100), (20, 10)), ((10, 40), 30, (100, 60), (15, 60)), ((5, 5), 0.2, (9, 9), (1, 1))],
)
def test_scaled_dims(crop, target, canvas, expected):
    assert scaled_dims(crop, target, canvas) == expected
