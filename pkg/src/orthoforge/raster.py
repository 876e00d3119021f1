"""Near-nadir orthophoto rendering from plane coordinates.

Adaptive resolution, supersampled layered roof/ground splatting,
compositing, hit-count clearing, Lanczos downsampling and center crop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DomainError
from .plane import (
    PlanePointSet,
    fit_plane_ransac,
    fix_orientation,
    to_plane_coords,
)

HOLE_SENTINEL = (0, 0, 0)


@dataclass
class RasterConfig:
    rho: float = 4.0                 # target points per pixel
    r_min: float = 0.02              # pixel scale clamp, units/px
    r_max: float = 0.50
    p_max: int = 16_777_216          # max base pixels H*W
    ssaa: int = 2                    # supersampling factor
    roof_band_frac: float = 0.15     # roof band width as fraction of robust height range
    ground_band: float = 0.12        # |h_norm| <= b selects ground samples
    m_min: int = 3                   # minimum roof hit count
    splat_radius_px: float = 2.0     # Gaussian disc radius, supersampled px
    crop_frac: float = 0.10          # removed per side
    w_sat: float = 1.0               # roof weight sum saturating to alpha = 1

    def __post_init__(self):
        if not (0 < self.r_min <= self.r_max):
            raise DomainError("require 0 < r_min <= r_max")
        if self.ssaa not in (1, 2, 3, 4):
            raise DomainError("ssaa must be in {1, 2, 3, 4}")
        if not (0 <= self.crop_frac < 0.5):
            raise DomainError("crop_frac must be in [0, 0.5)")
        if self.rho <= 0:
            raise DomainError("rho must be positive")
        if self.m_min < 1:
            raise DomainError("m_min must be >= 1")
        if self.p_max < 1:
            raise DomainError("p_max must be >= 1")
        if self.splat_radius_px <= 0:
            raise DomainError("splat_radius_px must be positive")


@dataclass
class OrthoFrameBuffer:
    """Supersampled per-pixel accumulators of the two-layer rasterizer."""

    width: int
    height: int
    pixel_scale: float               # base-resolution units/px
    origin: tuple[float, float]      # (u_min, v_min)
    ssaa: int
    roof_rgb: np.ndarray             # (H, W, 3) weighted color sums
    roof_w: np.ndarray               # (H, W) weight sums
    roof_hits: np.ndarray            # (H, W) int32
    hmax: np.ndarray                 # (H, W) max sample height (normalized)
    gnd_rgb: np.ndarray
    gnd_w: np.ndarray
    gnd_hits: np.ndarray
    m_min: int
    w_sat: float

    def alpha_roof(self) -> np.ndarray:
        """Occupancy in [0, 1]; zero where the roof layer was cleared."""
        valid = self.roof_hits >= self.m_min
        alpha = np.minimum(1.0, self.roof_w / self.w_sat)
        alpha[~valid] = 0.0
        return alpha

    def hole_mask(self) -> np.ndarray:
        return (self.roof_hits < self.m_min) & (self.gnd_hits == 0)


@dataclass
class OrthoImage:
    rgb: np.ndarray                  # (H, W, 3) uint8
    hole_mask: np.ndarray            # (H, W) bool
    pixel_scale: float               # units/px
    u_min: float = 0.0               # of the uncropped frame
    v_min: float = 0.0
    crop_offset: tuple[int, int] = (0, 0)   # (x, y) pixels removed per low side

    @property
    def width(self) -> int:
        return self.rgb.shape[1]

    @property
    def height(self) -> int:
        return self.rgb.shape[0]


def roof_weight(h, h_max, delta):
    """Top-band fusion weight exp((h - h_max)/tau) with tau = delta/2."""
    tau = delta / 2.0
    return np.exp((np.asarray(h, dtype=np.float64) - h_max) / tau)


def normalize_heights(h: np.ndarray) -> tuple[np.ndarray, float]:
    """Scale heights by the 98th percentile of positive values so the
    ground band b is dimensionless; returns (h_norm, scale)."""
    positive = h[h > 0]
    if len(positive) > 0:
        scale = float(np.percentile(positive, 98))
    else:
        scale = 0.0
    if scale <= 0:
        scale = max(float(np.abs(h).max(initial=0.0)), 1e-12)
    return h / scale, scale


def choose_resolution(
    pts: PlanePointSet, cfg: RasterConfig
) -> tuple[float, int, int, bool]:
    """Pixel scale and base dimensions; returns (r, width, height, area_fallback)."""
    if len(pts.coords) == 0:
        raise DomainError("cannot choose a resolution for an empty point set")
    u, v, h = pts.coords[:, 0], pts.coords[:, 1], pts.coords[:, 2]
    h_norm, _ = normalize_heights(h)
    band = np.abs(h_norm) <= cfg.ground_band
    fallback = False
    if band.any():
        bu, bv = u[band], v[band]
        area = float((bu.max() - bu.min()) * (bv.max() - bv.min()))
        n_band = int(band.sum())
    else:
        area = 0.0
        n_band = 0
    if area <= 0 or n_band == 0:
        fallback = True
        area = float((u.max() - u.min()) * (v.max() - v.min()))
        n_band = len(u)
        if area <= 0:
            area = 1.0
    target_pixels = n_band / cfg.rho
    r = math.sqrt(area / target_pixels)
    r = min(max(r, cfg.r_min), cfg.r_max)
    width, height = _grid_dims(u, v, r)
    if width * height > cfg.p_max:
        r *= math.sqrt(width * height / cfg.p_max)
        width, height = _grid_dims(u, v, r)
    return r, width, height, fallback


def _grid_dims(u, v, r):
    width = max(1, int(math.ceil((u.max() - u.min()) / r)))
    height = max(1, int(math.ceil((v.max() - v.min()) / r)))
    return width, height


def rasterize_layers(
    pts: PlanePointSet,
    cfg: RasterConfig,
    r: float | None = None,
    width: int | None = None,
    height: int | None = None,
    threads: int = 1,
) -> OrthoFrameBuffer:
    """Two-pass layered splatting on the ssaa-scaled grid.

    Pass 1 finds per-pixel h_max over roof-eligible samples
    (h_norm > ground_band); pass 2 accumulates the roof top band with
    exp((h - h_max)/tau) weights and the ground band unweighted, both
    modulated by a truncated Gaussian disc (sigma = radius/2).
    """
    if r is None or width is None or height is None:
        r, width, height, _ = choose_resolution(pts, cfg)
    u, v, h = pts.coords[:, 0], pts.coords[:, 1], pts.coords[:, 2]
    u_min, v_min = float(u.min()), float(v.min())
    h_norm, _ = normalize_heights(h)

    ss = cfg.ssaa
    w_ss, h_ss = width * ss, height * ss
    r_ss = r / ss
    xs = (u - u_min) / r_ss
    ys = h_ss - (v - v_min) / r_ss   # Eq-style y flip: v grows upward
    hs = np.ascontiguousarray(h_norm)

    roof_sel = h_norm > cfg.ground_band
    ground_sel = np.abs(h_norm) <= cfg.ground_band

    if roof_sel.any():
        delta = cfg.roof_band_frac * float(
            np.percentile(h_norm, 95) - np.percentile(h_norm, 5)
        )
    else:
        delta = cfg.roof_band_frac
    delta = max(delta, 1e-9)
    tau = delta / 2.0
    radius = float(cfg.splat_radius_px)
    sigma = radius / 2.0

    xs = np.ascontiguousarray(xs)
    ys = np.ascontiguousarray(ys)
    rgb = np.ascontiguousarray(pts.colors, dtype=np.float64)
    roof_mask = np.ascontiguousarray(roof_sel, dtype=np.uint8)
    gnd_mask = np.ascontiguousarray(ground_sel, dtype=np.uint8)

    if roof_sel.any():
        hmax = kernels.hmax_pass(
            xs[roof_sel], ys[roof_sel], hs[roof_sel], w_ss, h_ss, radius, threads
        )
    else:
        hmax = np.full((h_ss, w_ss), -np.inf)
    roof_rgb, roof_w, roof_hits, gnd_rgb, gnd_w, gnd_hits = kernels.accumulate_pass(
        xs, ys, hs, rgb, roof_mask, gnd_mask, hmax,
        delta, tau, radius, sigma, threads,
    )
    return OrthoFrameBuffer(
        width=width, height=height, pixel_scale=r, origin=(u_min, v_min),
        ssaa=ss, roof_rgb=roof_rgb, roof_w=roof_w, roof_hits=roof_hits,
        hmax=hmax, gnd_rgb=gnd_rgb, gnd_w=gnd_w, gnd_hits=gnd_hits,
        m_min=cfg.m_min, w_sat=cfg.w_sat,
    )


def composite_buffer(buf: OrthoFrameBuffer) -> tuple[np.ndarray, np.ndarray]:
    """Blend roof over ground; returns (float rgb (H, W, 3), hole mask).

    Pixels with a cleared roof layer fall back to the ground average;
    pixels with a roof but no ground contributors use the roof alone.
    """
    alpha = buf.alpha_roof()
    roof_valid = buf.roof_hits >= buf.m_min
    gnd_valid = buf.gnd_hits > 0
    with np.errstate(invalid="ignore", divide="ignore"):
        c_roof = buf.roof_rgb / buf.roof_w[..., None]
        c_gnd = buf.gnd_rgb / buf.gnd_w[..., None]
    c_roof[~roof_valid] = 0.0
    c_gnd[~gnd_valid] = 0.0
    # Roof-only pixels get full roof weight regardless of the weight sum.
    alpha = np.where(roof_valid & ~gnd_valid, 1.0, alpha)
    out = alpha[..., None] * c_roof + (1.0 - alpha[..., None]) * c_gnd
    holes = buf.hole_mask()
    out[holes] = HOLE_SENTINEL
    return out, holes


def composite_pixel(alpha: float, c_roof, c_gnd) -> np.ndarray:
    """Single-pixel blend alpha*c_roof + (1 - alpha)*c_gnd."""
    return alpha * np.asarray(c_roof, dtype=np.float64) + (1.0 - alpha) * np.asarray(
        c_gnd, dtype=np.float64
    )


def composite(buf: OrthoFrameBuffer) -> OrthoImage:
    """Supersampled composited image, quantized to uint8."""
    rgb, holes = composite_buffer(buf)
    return OrthoImage(
        rgb=np.clip(np.rint(rgb), 0, 255).astype(np.uint8),
        hole_mask=holes,
        pixel_scale=buf.pixel_scale / buf.ssaa,
        u_min=buf.origin[0],
        v_min=buf.origin[1],
    )


def _lanczos_weights(factor: int, a: int = 3) -> tuple[np.ndarray, int]:
    """Normalized Lanczos-a taps for an integer downsample factor.

    Output pixel i is centered at input coordinate i*factor + (factor-1)/2;
    returns (weights, first-tap offset m0 relative to i*factor).
    """
    center = (factor - 1) / 2.0
    m0 = int(math.ceil(center - a * factor))
    m1 = int(math.floor(center + a * factor))
    m = np.arange(m0, m1 + 1)
    d = (m - center) / factor
    w = np.sinc(d) * np.sinc(d / a)
    w[np.abs(d) >= a] = 0.0
    w = w / w.sum()
    return w, m0


def _downsample_axis(arr: np.ndarray, factor: int, axis: int) -> np.ndarray:
    w, m0 = _lanczos_weights(factor)
    arr = np.moveaxis(arr, axis, 0)
    n_out = arr.shape[0] // factor
    pad_lo = max(0, -m0)
    pad_hi = max(0, (n_out - 1) * factor + m0 + len(w) - 1 - (arr.shape[0] - 1))
    pad_width = [(pad_lo, pad_hi)] + [(0, 0)] * (arr.ndim - 1)
    padded = np.pad(arr, pad_width, mode="edge")
    out = np.zeros((n_out,) + arr.shape[1:], dtype=np.float64)
    for t, wt in enumerate(w):
        start = m0 + t + pad_lo
        out += wt * padded[start : start + n_out * factor : factor]
    return np.moveaxis(out, 0, axis)


def downsample_lanczos(img: OrthoImage, ssaa: int) -> OrthoImage:
    """Separable Lanczos-3 downsampling by the integer ssaa factor.

    The hole mask is reduced by majority vote per ssaa x ssaa block and
    hole pixels reset to the sentinel afterwards. ssaa = 1 is the identity.
    """
    if ssaa < 1:
        raise DomainError("ssaa must be >= 1")
    if ssaa == 1:
        return img
    rgb = img.rgb.astype(np.float64)
    out = _downsample_axis(_downsample_axis(rgb, ssaa, 0), ssaa, 1)
    out = np.clip(np.rint(out), 0, 255).astype(np.uint8)
    h_out, w_out = out.shape[0], out.shape[1]
    blocks = img.hole_mask[: h_out * ssaa, : w_out * ssaa].reshape(
        h_out, ssaa, w_out, ssaa
    )
    holes = blocks.sum(axis=(1, 3)) > (ssaa * ssaa) / 2
    out[holes] = HOLE_SENTINEL
    return OrthoImage(
        rgb=out, hole_mask=holes, pixel_scale=img.pixel_scale * ssaa,
        u_min=img.u_min, v_min=img.v_min, crop_offset=img.crop_offset,
    )


def center_crop(img: OrthoImage, crop_frac: float) -> OrthoImage:
    """Remove floor(crop_frac * dim) pixels from each side of each axis."""
    if not (0 <= crop_frac < 0.5):
        raise DomainError("crop_frac must be in [0, 0.5)")
    dx = int(math.floor(crop_frac * img.width))
    dy = int(math.floor(crop_frac * img.height))
    new_w = img.width - 2 * dx
    new_h = img.height - 2 * dy
    if new_w < 1 or new_h < 1:
        raise DomainError("crop leaves an empty image")
    return OrthoImage(
        rgb=img.rgb[dy : dy + new_h, dx : dx + new_w],
        hole_mask=img.hole_mask[dy : dy + new_h, dx : dx + new_w],
        pixel_scale=img.pixel_scale,
        u_min=img.u_min,
        v_min=img.v_min,
        crop_offset=(img.crop_offset[0] + dx, img.crop_offset[1] + dy),
    )


@dataclass
class RenderInfo:
    plane: object
    pixel_scale: float
    base_width: int
    base_height: int
    area_fallback: bool
    buffer: OrthoFrameBuffer | None = None


def render_orthophoto(
    cloud,
    cfg: RasterConfig | None = None,
    seed: int = 0,
    threads: int = 1,
    ransac_threshold: float | None = None,
    ransac_iterations: int = 1024,
    keep_buffer: bool = False,
) -> tuple[OrthoImage, RenderInfo]:
    """Full pipeline: fit, frame, plane coords, orient, rasterize,
    composite, downsample, crop. Deterministic for a fixed seed."""
    if cfg is None:
        cfg = RasterConfig()
    plane = fit_plane_ransac(
        cloud, threshold=ransac_threshold, iterations=ransac_iterations, seed=seed
    )
    pts = to_plane_coords(cloud, plane)
    pts, plane = fix_orientation(pts, plane)
    r, width, height, fallback = choose_resolution(pts, cfg)
    buf = rasterize_layers(pts, cfg, r=r, width=width, height=height, threads=threads)
    img = composite(buf)
    img = downsample_lanczos(img, cfg.ssaa)
    img = center_crop(img, cfg.crop_frac)
    info = RenderInfo(
        plane=plane, pixel_scale=r, base_width=width, base_height=height,
        area_fallback=fallback, buffer=buf if keep_buffer else None,
    )
    return img, info
