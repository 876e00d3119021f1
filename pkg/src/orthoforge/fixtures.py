"""Synthetic box-city scenes with analytic ground truth, plus image
comparison metrics used by the end-to-end tests.

The scene lives on the world z = 0 plane: a textured ground rectangle
and axis-aligned boxes with distinct roof and wall colors. The analytic
nadir projection (taller box wins, walls invisible) serves as the
oracle for the rendering pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import DomainError
from .pointcloud import ColoredPointCloud
from .raster import OrthoImage


@dataclass
class Box:
    center_u: float
    center_v: float
    width: float
    depth: float
    height: float
    roof_rgb: tuple[int, int, int]
    wall_rgb: tuple[int, int, int]


@dataclass
class BoxCityScene:
    extent: tuple[float, float] = (100.0, 100.0)     # ground W x H, centered at 0
    ground_rgb: tuple[int, int, int] = (40, 140, 40)
    checker_rgb: tuple[int, int, int] | None = None  # second checker color, if any
    checker_cell: float = 10.0
    boxes: list = field(default_factory=list)
    density: float = 50.0                            # points per unit^2
    noise_sigma: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if self.density <= 0:
            raise DomainError("density must be positive")
        for b in self.boxes:
            if b.height <= 0:
                raise DomainError("box heights must be positive")
            hw, hd = b.width / 2, b.depth / 2
            if (
                abs(b.center_u) + hw > self.extent[0] / 2
                or abs(b.center_v) + hd > self.extent[1] / 2
            ):
                raise DomainError("boxes must lie within the ground extent")


def _ground_color_at(scene: BoxCityScene, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    base = np.array(scene.ground_rgb, dtype=np.float64)
    if scene.checker_rgb is None:
        return np.broadcast_to(base, x.shape + (3,)).copy()
    alt = np.array(scene.checker_rgb, dtype=np.float64)
    cell = scene.checker_cell
    parity = (np.floor(x / cell).astype(np.int64) + np.floor(y / cell).astype(np.int64)) % 2
    return np.where(parity[..., None] == 0, base, alt)


def _sample_rect(rng, n, x0, x1, y0, y1):
    xs = rng.uniform(x0, x1, n)
    ys = rng.uniform(y0, y1, n)
    return xs, ys


def generate_box_city(scene: BoxCityScene) -> ColoredPointCloud:
    """Sample ground, roofs, and walls at the scene density with Gaussian
    position noise; deterministic per scene seed."""
    rng = np.random.Generator(np.random.Philox(scene.seed))
    w, d = scene.extent
    pts = []
    cols = []

    n_ground = int(round(scene.density * w * d))
    gx, gy = _sample_rect(rng, n_ground, -w / 2, w / 2, -d / 2, d / 2)
    gz = np.zeros(n_ground)
    pts.append(np.stack([gx, gy, gz], axis=1))
    cols.append(_ground_color_at(scene, gx, gy))

    for b in scene.boxes:
        hw, hd = b.width / 2, b.depth / 2
        n_roof = max(1, int(round(scene.density * b.width * b.depth)))
        rx, ry = _sample_rect(
            rng, n_roof, b.center_u - hw, b.center_u + hw,
            b.center_v - hd, b.center_v + hd,
        )
        pts.append(np.stack([rx, ry, np.full(n_roof, b.height)], axis=1))
        cols.append(np.broadcast_to(np.array(b.roof_rgb, float), (n_roof, 3)).copy())
        # Four walls.
        for axis, lo, hi, fixed in (
            (0, b.center_v - hd, b.center_v + hd, b.center_u - hw),
            (0, b.center_v - hd, b.center_v + hd, b.center_u + hw),
            (1, b.center_u - hw, b.center_u + hw, b.center_v - hd),
            (1, b.center_u - hw, b.center_u + hw, b.center_v + hd),
        ):
            span = hi - lo
            n_wall = max(1, int(round(scene.density * span * b.height)))
            t = rng.uniform(lo, hi, n_wall)
            z = rng.uniform(0, b.height, n_wall)
            if axis == 0:
                wall = np.stack([np.full(n_wall, fixed), t, z], axis=1)
            else:
                wall = np.stack([t, np.full(n_wall, fixed), z], axis=1)
            pts.append(wall)
            cols.append(
                np.broadcast_to(np.array(b.wall_rgb, float), (n_wall, 3)).copy()
            )

    points = np.concatenate(pts)
    colors = np.concatenate(cols)
    if scene.noise_sigma > 0:
        points = points + rng.normal(0.0, scene.noise_sigma, points.shape)
    return ColoredPointCloud(points, np.clip(colors, 0, 255).astype(np.uint8))


IDENTITY_FRAME = ((0.0, 0.0), (1.0, 0.0), (0.0, 1.0))


def frame_from_plane(plane):
    """(origin, u direction, v direction) in world xy for a fitted plane;
    lets the analytic oracles evaluate on a rendered image's grid."""
    return (
        (float(plane.centroid[0]), float(plane.centroid[1])),
        (float(plane.basis_u[0]), float(plane.basis_u[1])),
        (float(plane.basis_v[0]), float(plane.basis_v[1])),
    )


def _grid_world_xy(u_min, v_min, pixel_scale, width, height, frame):
    (ox, oy), (ux, uy), (vx, vy) = frame
    u = u_min + (np.arange(width) + 0.5) * pixel_scale
    v = v_min + (height - 1 - np.arange(height) + 0.5) * pixel_scale
    U, V = np.meshgrid(u, v)
    return ox + U * ux + V * vx, oy + U * uy + V * vy


def ground_truth_on_grid(
    scene: BoxCityScene,
    u_min: float,
    v_min: float,
    pixel_scale: float,
    width: int,
    height: int,
    frame=IDENTITY_FRAME,
) -> OrthoImage:
    """Analytic nadir projection on a raster grid with the pipeline's
    y-flip convention. ``frame`` maps grid (u, v) to world (x, y):
    world = origin + u * u_dir + v * v_dir (frame_from_plane for rendered
    outputs). Pixels outside the ground extent are flagged as holes.
    Taller boxes win where footprints overlap; walls are invisible from
    nadir."""
    X, Y = _grid_world_xy(u_min, v_min, pixel_scale, width, height, frame)
    rgb = _ground_color_at(scene, X, Y)
    heights = np.zeros_like(X)
    for b in sorted(scene.boxes, key=lambda b: b.height):
        inside = (
            (np.abs(X - b.center_u) <= b.width / 2)
            & (np.abs(Y - b.center_v) <= b.depth / 2)
            & (b.height >= heights)
        )
        rgb[inside] = np.array(b.roof_rgb, dtype=np.float64)
        heights[inside] = b.height
    w, d = scene.extent
    holes = (np.abs(X) > w / 2) | (np.abs(Y) > d / 2)
    out = np.clip(np.rint(rgb), 0, 255).astype(np.uint8)
    out[holes] = 0
    return OrthoImage(
        rgb=out, hole_mask=holes, pixel_scale=pixel_scale, u_min=u_min, v_min=v_min
    )


def ground_truth_image(scene: BoxCityScene, pixel_scale: float) -> OrthoImage:
    """Ground truth over the full ground extent in world coordinates."""
    w, d = scene.extent
    width = max(1, int(np.ceil(w / pixel_scale)))
    height = max(1, int(np.ceil(d / pixel_scale)))
    return ground_truth_on_grid(
        scene, -w / 2, -d / 2, pixel_scale, width, height
    )


def roof_footprint_mask(
    scene: BoxCityScene,
    u_min: float,
    v_min: float,
    pixel_scale: float,
    width: int,
    height: int,
    frame=IDENTITY_FRAME,
    erode: int = 0,
) -> np.ndarray:
    """Boolean mask of pixels inside any box footprint, optionally eroded
    to exclude boundary pixels straddling a roof edge."""
    X, Y = _grid_world_xy(u_min, v_min, pixel_scale, width, height, frame)
    mask = np.zeros(X.shape, dtype=bool)
    for b in scene.boxes:
        mask |= (np.abs(X - b.center_u) <= b.width / 2) & (
            np.abs(Y - b.center_v) <= b.depth / 2
        )
    if erode > 0:
        mask = ndimage.binary_erosion(mask, iterations=erode)
    return mask


def render_perspective_view(
    scene: BoxCityScene,
    camera_pos,
    look_at,
    width: int = 480,
    height: int = 480,
    fov_deg: float = 55.0,
) -> np.ndarray:
    """Ray-cast pinhole view of the scene (uint8 RGB).

    Used to synthesize the oblique UAV photo for the perspective
    fallback comparison; walls and displaced roofs become visible.
    """
    cam = np.asarray(camera_pos, dtype=np.float64)
    target = np.asarray(look_at, dtype=np.float64)
    fwd = target - cam
    fwd = fwd / np.linalg.norm(fwd)
    world_up = np.array([0.0, 0.0, 1.0])
    right = np.cross(fwd, world_up)
    right = right / np.linalg.norm(right)
    up = np.cross(right, fwd)

    f = 0.5 * width / np.tan(np.deg2rad(fov_deg) / 2)
    px, py = np.meshgrid(np.arange(width) + 0.5, np.arange(height) + 0.5)
    dirs = (
        (px - width / 2)[..., None] * right
        + (height / 2 - py)[..., None] * up
        + f * fwd
    )
    dirs = dirs / np.linalg.norm(dirs, axis=-1, keepdims=True)

    t_best = np.full((height, width), np.inf)
    rgb = np.zeros((height, width, 3), dtype=np.float64)

    # Ground plane z = 0.
    dz = dirs[..., 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        t_g = -cam[2] / dz
    gx = cam[0] + t_g * dirs[..., 0]
    gy = cam[1] + t_g * dirs[..., 1]
    w, d = scene.extent
    hit = (t_g > 0) & (np.abs(gx) <= w / 2) & (np.abs(gy) <= d / 2)
    t_best[hit] = t_g[hit]
    rgb[hit] = _ground_color_at(scene, gx, gy)[hit]

    for b in scene.boxes:
        lo = np.array([b.center_u - b.width / 2, b.center_v - b.depth / 2, 0.0])
        hi = np.array([b.center_u + b.width / 2, b.center_v + b.depth / 2, b.height])
        t0 = np.full((height, width), -np.inf)
        t1 = np.full((height, width), np.inf)
        axis_entry = np.zeros((height, width), dtype=np.int8)
        for ax in range(3):
            dgt = dirs[..., ax]
            with np.errstate(divide="ignore", invalid="ignore"):
                ta = (lo[ax] - cam[ax]) / dgt
                tb = (hi[ax] - cam[ax]) / dgt
            near = np.minimum(ta, tb)
            far = np.maximum(ta, tb)
            parallel = np.abs(dgt) < 1e-15
            outside = parallel & ((cam[ax] < lo[ax]) | (cam[ax] > hi[ax]))
            near = np.where(parallel, -np.inf, near)
            far = np.where(parallel, np.inf, far)
            far = np.where(outside, -np.inf, far)
            update = near > t0
            axis_entry = np.where(update, ax, axis_entry)
            t0 = np.maximum(t0, near)
            t1 = np.minimum(t1, far)
        hit = (t0 <= t1) & (t0 > 0) & (t0 < t_best)
        t_best[hit] = t0[hit]
        is_roof = hit & (axis_entry == 2)
        rgb[is_roof] = np.array(b.roof_rgb, dtype=np.float64)
        rgb[hit & ~is_roof] = np.array(b.wall_rgb, dtype=np.float64)

    return np.clip(np.rint(rgb), 0, 255).astype(np.uint8)


def project_to_camera(points, camera_pos, look_at, width, height, fov_deg=55.0):
    """Pixel coordinates of world points under the same pinhole model as
    render_perspective_view."""
    cam = np.asarray(camera_pos, dtype=np.float64)
    target = np.asarray(look_at, dtype=np.float64)
    fwd = target - cam
    fwd = fwd / np.linalg.norm(fwd)
    world_up = np.array([0.0, 0.0, 1.0])
    right = np.cross(fwd, world_up)
    right = right / np.linalg.norm(right)
    up = np.cross(right, fwd)
    f = 0.5 * width / np.tan(np.deg2rad(fov_deg) / 2)
    rel = np.asarray(points, dtype=np.float64) - cam
    xc = rel @ right
    yc = rel @ up
    zc = rel @ fwd
    px = width / 2 + f * xc / zc - 0.5
    py = height / 2 - f * yc / zc - 0.5
    return np.stack([px, py], axis=1)


def _ssim_plane(a, b, win: int = 8):
    c1 = (0.01 * 255) ** 2
    c2 = (0.03 * 255) ** 2
    kwargs = {"size": win, "mode": "reflect"}
    mu_a = ndimage.uniform_filter(a, **kwargs)
    mu_b = ndimage.uniform_filter(b, **kwargs)
    var_a = ndimage.uniform_filter(a * a, **kwargs) - mu_a * mu_a
    var_b = ndimage.uniform_filter(b * b, **kwargs) - mu_b * mu_b
    cov = ndimage.uniform_filter(a * b, **kwargs) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


@dataclass
class ImageComparison:
    mean_abs_diff: np.ndarray     # per channel
    fraction_within_16: float     # max-channel difference <= 16
    ssim: float


def compare_images(
    a: OrthoImage, b: OrthoImage, exclude_holes: bool = False
) -> ImageComparison:
    """Per-channel MAD, fraction of pixels within 16 levels, and SSIM."""
    if a.rgb.shape != b.rgb.shape:
        raise DomainError(f"dimension mismatch: {a.rgb.shape} vs {b.rgb.shape}")
    fa = a.rgb.astype(np.float64)
    fb = b.rgb.astype(np.float64)
    if exclude_holes:
        valid = ~(a.hole_mask | b.hole_mask)
    else:
        valid = np.ones(a.rgb.shape[:2], dtype=bool)
    if not valid.any():
        raise DomainError("no pixels left to compare")
    diff = np.abs(fa - fb)
    mad = diff[valid].mean(axis=0)
    within = float((diff[valid].max(axis=1) <= 16).mean())
    ssim = float(
        np.mean([_ssim_plane(fa[..., c], fb[..., c]) for c in range(3)])
    )
    return ImageComparison(
        mean_abs_diff=mad, fraction_within_16=within, ssim=ssim
    )
