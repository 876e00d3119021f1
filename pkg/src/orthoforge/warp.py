"""Perspective orthorectification fallback.

Estimates an 8-DOF homography from point correspondences by the
normalized direct linear method and warps the source photo onto a
ground-plane pixel grid with bilinear sampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError, DomainError
from .raster import HOLE_SENTINEL, OrthoImage


def _collinear(p, q, r, eps=1e-9):
    area = abs(
        (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    )
    scale = max(
        abs(q[0] - p[0]), abs(r[0] - p[0]), abs(q[1] - p[1]), abs(r[1] - p[1]), 1.0
    )
    return area <= eps * scale * scale


def _check_degenerate(points):
    n = len(points)
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                if _collinear(points[i], points[j], points[k]):
                    raise DegenerateGeometryError(
                        f"points {i}, {j}, {k} are collinear"
                    )


def _normalization(points):
    pts = np.asarray(points, dtype=np.float64)
    mean = pts.mean(axis=0)
    dist = np.sqrt(((pts - mean) ** 2).sum(axis=1)).mean()
    s = np.sqrt(2.0) / dist if dist > 0 else 1.0
    T = np.array(
        [[s, 0, -s * mean[0]], [0, s, -s * mean[1]], [0, 0, 1]], dtype=np.float64
    )
    return T


def estimate_homography(src, dst):
    """H (3x3) with dst ~ H @ src in homogeneous coordinates.

    src and dst are (N >= 4, 2) arrays; any 3 collinear points in either
    set raise DegenerateGeometryError.
    """
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    if src.shape != dst.shape or src.shape[0] < 4 or src.shape[1] != 2:
        raise DomainError("need matching (N >= 4, 2) correspondence arrays")
    _check_degenerate(src)
    _check_degenerate(dst)
    Ts, Td = _normalization(src), _normalization(dst)
    sh = np.column_stack([src, np.ones(len(src))]) @ Ts.T
    dh = np.column_stack([dst, np.ones(len(dst))]) @ Td.T
    rows = []
    for (x, y, _), (u, v, _) in zip(sh, dh):
        rows.append([-x, -y, -1, 0, 0, 0, u * x, u * y, u])
        rows.append([0, 0, 0, -x, -y, -1, v * x, v * y, v])
    A = np.asarray(rows)
    _, _, vt = np.linalg.svd(A)
    H = vt[-1].reshape(3, 3)
    H = np.linalg.inv(Td) @ H @ Ts
    return H / H[2, 2]


def apply_homography(H, points):
    pts = np.asarray(points, dtype=np.float64)
    ph = np.column_stack([pts, np.ones(len(pts))]) @ H.T
    return ph[:, :2] / ph[:, 2:3]


def _bilinear_sample(img, xs, ys):
    """Sample (H, W, C) float at continuous pixel coordinates; returns
    (values, inside mask). Coordinates address pixel centers at integers."""
    h, w = img.shape[:2]
    # Small tolerance so pixels on the footprint boundary survive round-off.
    eps = 1e-6
    inside = (xs >= -eps) & (xs <= w - 1 + eps) & (ys >= -eps) & (ys <= h - 1 + eps)
    x = np.clip(xs, 0, w - 1)
    y = np.clip(ys, 0, h - 1)
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (x - x0)[..., None]
    fy = (y - y0)[..., None]
    val = (
        img[y0, x0] * (1 - fx) * (1 - fy)
        + img[y0, x1] * fx * (1 - fy)
        + img[y1, x0] * (1 - fx) * fy
        + img[y1, x1] * fx * fy
    )
    return val, inside


@dataclass
class WarpGrid:
    """Target ground-plane raster: (u, v) origin, pixel scale, dimensions."""

    u_min: float
    v_min: float
    pixel_scale: float
    width: int
    height: int

    def pixel_uv(self):
        xs = np.arange(self.width)
        ys = np.arange(self.height)
        u = self.u_min + (xs + 0.5) * self.pixel_scale
        v = self.v_min + (self.height - 1 - ys + 0.5) * self.pixel_scale
        return np.meshgrid(u, v)


def grid_from_targets(targets, pixel_scale: float, margin: float = 0.0) -> WarpGrid:
    t = np.asarray(targets, dtype=np.float64)
    u_min, v_min = t.min(axis=0) - margin
    u_max, v_max = t.max(axis=0) + margin
    width = max(1, int(np.ceil((u_max - u_min) / pixel_scale)))
    height = max(1, int(np.ceil((v_max - v_min) / pixel_scale)))
    return WarpGrid(float(u_min), float(v_min), pixel_scale, width, height)


def perspective_fallback(
    image: np.ndarray,
    src_points,
    target_points,
    grid: WarpGrid,
) -> OrthoImage:
    """Warp a perspective photo onto the ground-plane grid.

    src_points are pixel positions in ``image`` matching target_points in
    ground-plane (u, v) units. Pixels outside the source footprint are
    flagged as holes.
    """
    H = estimate_homography(np.asarray(target_points), np.asarray(src_points))
    uu, vv = grid.pixel_uv()
    uv = np.stack([uu.ravel(), vv.ravel()], axis=1)
    src = apply_homography(H, uv)
    xs = src[:, 0].reshape(uu.shape)
    ys = src[:, 1].reshape(uu.shape)
    vals, inside = _bilinear_sample(image.astype(np.float64), xs, ys)
    rgb = np.clip(np.rint(vals), 0, 255).astype(np.uint8)
    holes = ~inside
    rgb[holes] = HOLE_SENTINEL
    return OrthoImage(
        rgb=rgb, hole_mask=holes, pixel_scale=grid.pixel_scale,
        u_min=grid.u_min, v_min=grid.v_min,
    )
