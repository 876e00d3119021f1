"""Homography estimation and the perspective fallback warp."""

import numpy as np
import pytest

from orthoforge.errors import DegenerateGeometryError, DomainError
from orthoforge.warp import (
    WarpGrid,
    apply_homography,
    estimate_homography,
    grid_from_targets,
    perspective_fallback,
)


def _random_h(rng):
    H = np.eye(3) + 0.1 * rng.normal(size=(3, 3))
    H[2, 2] = 1.0
    return H


def test_exact_recovery_four_points():
    src = np.array([[0.0, 0], [10, 0], [10, 10], [0, 10]])
    H_true = np.array([[1.2, 0.1, 3.0], [-0.05, 0.9, -1.0], [0.001, 0.002, 1.0]])
    dst = apply_homography(H_true, src)
    H = estimate_homography(src, dst)
    np.testing.assert_allclose(H, H_true / H_true[2, 2], atol=1e-9)


def test_overdetermined_least_squares():
    rng = np.random.Generator(np.random.Philox(1))
    H_true = _random_h(rng)
    src = rng.uniform(0, 100, size=(20, 2))
    dst = apply_homography(H_true, src)
    H = estimate_homography(src, dst)
    err = np.abs(apply_homography(H, src) - dst).max()
    assert err < 1e-8


def test_collinear_points_rejected():
    src = np.array([[0.0, 0], [1, 1], [2, 2], [5, 0]])
    dst = np.array([[0.0, 0], [1, 0], [1, 1], [0, 1]])
    with pytest.raises(DegenerateGeometryError, match="collinear"):
        estimate_homography(src, dst)


def test_shape_validation():
    with pytest.raises(DomainError):
        estimate_homography(np.zeros((3, 2)), np.zeros((3, 2)))


def test_grid_pixel_uv_y_flip():
    grid = WarpGrid(u_min=0.0, v_min=0.0, pixel_scale=1.0, width=4, height=3)
    uu, vv = grid.pixel_uv()
    # Row 0 is the top of the image = largest v.
    assert vv[0, 0] > vv[-1, 0]
    assert uu[0, 0] == pytest.approx(0.5)
    assert vv[-1, 0] == pytest.approx(0.5)


def test_grid_from_targets():
    grid = grid_from_targets([(0.0, 0.0), (10.0, 5.0)], pixel_scale=0.5, margin=1.0)
    assert grid.u_min == pytest.approx(-1.0)
    assert grid.width == 24
    assert grid.height == 14


def test_identity_warp_round_trip():
    rng = np.random.Generator(np.random.Philox(2))
    img = rng.integers(0, 256, size=(20, 20, 3)).astype(np.uint8)
    # Image pixel (x, y) maps to target (u, v) = (x, H - 1 - y): identity
    # up to the grid's y flip.
    src = np.array([[0.0, 0], [19, 0], [19, 19], [0, 19]])
    dst = np.array([[0.0, 19], [19, 19], [19, 0], [0, 0]])
    grid = WarpGrid(u_min=-0.5, v_min=-0.5, pixel_scale=1.0, width=20, height=20)
    out = perspective_fallback(img, src, dst, grid)
    assert not out.hole_mask.any()
    np.testing.assert_array_equal(out.rgb, img)


def test_warp_marks_outside_as_holes():
    img = np.full((10, 10, 3), 200, dtype=np.uint8)
    src = np.array([[0.0, 0], [9, 0], [9, 9], [0, 9]])
    dst = np.array([[0.0, 9], [9, 9], [9, 0], [0, 0]])
    grid = WarpGrid(u_min=-5.5, v_min=-5.5, pixel_scale=1.0, width=20, height=20)
    out = perspective_fallback(img, src, dst, grid)
    assert out.hole_mask.any()
    assert (out.rgb[out.hole_mask] == 0).all()
    assert (out.rgb[~out.hole_mask] == 200).all()
