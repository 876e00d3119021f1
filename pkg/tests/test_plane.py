"""RANSAC plane fit, frame construction, plane coordinates, orientation."""

import numpy as np
import pytest

from orthoforge.errors import DegenerateGeometryError, DomainError, NoPlaneError
from orthoforge.plane import (
    build_frame,
    fit_plane_ransac,
    fix_orientation,
    from_plane_coords,
    to_plane_coords,
)
from orthoforge.pointcloud import ColoredPointCloud, bounding_box

from conftest import make_plane_cloud


def _angle_deg(n, expected):
    c = abs(float(np.dot(n, expected)))
    return np.degrees(np.arccos(min(1.0, c)))


def test_fit_exact_plane():
    cloud = make_plane_cloud(n=500, normal=(0, 0, 1), offset=5.0)
    plane = fit_plane_ransac(cloud, seed=1)
    assert _angle_deg(plane.normal, [0, 0, 1]) < 1e-6
    # a*x + b*y + c*z + d = 0 on the plane z = 5
    assert abs(abs(plane.offset) - 5.0) < 1e-9
    assert plane.inlier_fraction > 0.99


def test_fit_with_noise_and_outliers():
    cloud = make_plane_cloud(
        n=4000, normal=(1, 2, 3), offset=2.0, noise=0.01,
        outlier_frac=0.3, seed=9,
    )
    plane = fit_plane_ransac(cloud, seed=2)
    assert _angle_deg(plane.normal, np.array([1, 2, 3]) / np.sqrt(14)) < 0.1


def test_deterministic_per_seed():
    cloud = make_plane_cloud(n=2000, noise=0.02, outlier_frac=0.2, seed=4)
    p1 = fit_plane_ransac(cloud, seed=7)
    p2 = fit_plane_ransac(cloud, seed=7)
    np.testing.assert_array_equal(p1.normal, p2.normal)
    assert p1.offset == p2.offset


def test_too_few_points():
    cloud = ColoredPointCloud(np.zeros((2, 3)), np.zeros((2, 3), dtype=np.uint8))
    with pytest.raises(DegenerateGeometryError):
        fit_plane_ransac(cloud)


def test_no_plane_in_uniform_noise():
    rng = np.random.Generator(np.random.Philox(0))
    pts = rng.uniform(0, 100, size=(5000, 3))
    cloud = ColoredPointCloud(pts, np.zeros((5000, 3), dtype=np.uint8))
    with pytest.raises(NoPlaneError):
        fit_plane_ransac(cloud, threshold=0.05, seed=0)


def test_invalid_parameters():
    cloud = make_plane_cloud(n=100)
    with pytest.raises(DomainError):
        fit_plane_ransac(cloud, threshold=-1.0)
    with pytest.raises(DomainError):
        fit_plane_ransac(cloud, iterations=0)


def test_build_frame_formula():
    # n = (0, 0, 1): k = 0, so u = e_x x n = (0, -1, 0) and v = (1, 0, 0).
    from orthoforge.plane import GroundPlane

    plane = build_frame(
        GroundPlane(
            normal=np.array([0.0, 0.0, 1.0]), offset=0.0,
            centroid=np.zeros(3), inlier_fraction=1.0, threshold=0.1,
        )
    )
    np.testing.assert_allclose(plane.basis_u, [0, -1, 0], atol=1e-12)
    np.testing.assert_allclose(plane.basis_v, [1, 0, 0], atol=1e-12)


def test_frame_is_orthonormal_right_handed():
    rng = np.random.Generator(np.random.Philox(5))
    from orthoforge.plane import GroundPlane

    for _ in range(50):
        n = rng.normal(size=3)
        n /= np.linalg.norm(n)
        plane = build_frame(
            GroundPlane(
                normal=n, offset=0.0, centroid=np.zeros(3),
                inlier_fraction=1.0, threshold=0.1,
            )
        )
        u, v = plane.basis_u, plane.basis_v
        assert abs(np.dot(u, v)) < 1e-12
        assert abs(np.dot(u, plane.normal)) < 1e-12
        np.testing.assert_allclose(np.cross(u, v), plane.normal, atol=1e-12)


def test_plane_coords_round_trip():
    cloud = make_plane_cloud(n=1000, normal=(1, 1, 2), offset=3.0, noise=0.5, seed=2)
    plane = fit_plane_ransac(cloud, threshold=2.0, seed=0)
    pts = to_plane_coords(cloud, plane)
    back = from_plane_coords(pts, plane)
    diag = bounding_box(cloud).diagonal
    err = np.abs(back - cloud.points).max()
    assert err < 1e-9 * diag


def test_fix_orientation_flips_and_is_idempotent():
    cloud = make_plane_cloud(n=500, seed=1)
    # Mass below the plane.
    extra = cloud.points.copy()
    extra[:, 2] -= 3.0
    both = ColoredPointCloud(
        np.concatenate([cloud.points, extra]),
        np.concatenate([cloud.colors, cloud.colors]),
    )
    plane = fit_plane_ransac(both, threshold=0.05, seed=0)
    pts = to_plane_coords(both, plane)
    pts2, plane2 = fix_orientation(pts, plane)
    h = pts2.coords[:, 2]
    assert (h > plane2.threshold).sum() >= (h < -plane2.threshold).sum()
    pts3, plane3 = fix_orientation(pts2, plane2)
    np.testing.assert_array_equal(pts3.coords, pts2.coords)
    np.testing.assert_array_equal(plane3.normal, plane2.normal)
    # The frame stays right-handed after any flip.
    np.testing.assert_allclose(
        np.cross(plane2.basis_u, plane2.basis_v), plane2.normal, atol=1e-12
    )
