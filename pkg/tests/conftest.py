"""Shared fixtures: small synthetic clouds and box-city scenes."""

import numpy as np
import pytest

from orthoforge.fixtures import Box, BoxCityScene, generate_box_city
from orthoforge.pointcloud import ColoredPointCloud


def make_plane_cloud(
    n=2000,
    normal=(0.0, 0.0, 1.0),
    offset=5.0,
    extent=10.0,
    noise=0.0,
    outlier_frac=0.0,
    seed=0,
):
    """Points on the plane n.x = offset (n unit), optional noise/outliers."""
    rng = np.random.Generator(np.random.Philox(seed))
    n_vec = np.asarray(normal, dtype=np.float64)
    n_vec = n_vec / np.linalg.norm(n_vec)
    # in-plane frame
    k = int(np.argmin(np.abs(n_vec)))
    e = np.zeros(3)
    e[k] = 1.0
    u = np.cross(e, n_vec)
    u /= np.linalg.norm(u)
    v = np.cross(n_vec, u)
    uv = rng.uniform(-extent / 2, extent / 2, size=(n, 2))
    pts = offset * n_vec + uv[:, :1] * u + uv[:, 1:] * v
    if noise > 0:
        pts = pts + rng.normal(0.0, noise, size=pts.shape) * n_vec
    n_out = int(round(outlier_frac * n))
    if n_out:
        lo = pts.min(axis=0)
        hi = pts.max(axis=0)
        idx = rng.choice(n, size=n_out, replace=False)
        pts[idx] = rng.uniform(lo, hi, size=(n_out, 3))
    colors = rng.integers(0, 256, size=(n, 3)).astype(np.uint8)
    return ColoredPointCloud(points=pts, colors=colors)


@pytest.fixture
def flat_cloud():
    return make_plane_cloud(n=3000, seed=7)


@pytest.fixture
def small_scene():
    """A 40x40 box city with two boxes; ~90k points, fast to render."""
    return BoxCityScene(
        extent=(40.0, 40.0),
        ground_rgb=(60, 110, 60),
        boxes=[
            Box(-8.0, -8.0, 10.0, 10.0, 6.0, (200, 40, 40), (40, 40, 220)),
            Box(9.0, 7.0, 8.0, 12.0, 9.0, (230, 200, 60), (90, 70, 40)),
        ],
        density=40.0,
        noise_sigma=0.02,
        seed=5,
    )


@pytest.fixture
def small_cloud(small_scene):
    return generate_box_city(small_scene)
