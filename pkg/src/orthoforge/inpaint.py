"""Hole filling and color-statistics harmonization.

Fast-marching style inpainting: hole pixels are visited in increasing
distance from the known region and filled with an inverse-distance
weighted average of known (original or already filled) pixels within
the given radius. Filled values therefore stay inside the convex hull
of their neighborhood, channel by channel.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .errors import DomainError
from .raster import OrthoImage


def inpaint(img: OrthoImage, mask: np.ndarray | None = None, radius: int = 5,
            dilation: int = 1) -> OrthoImage:
    """Fill hole pixels; non-hole pixels are unchanged and no holes remain."""
    if radius < 1:
        raise DomainError("inpaint radius must be >= 1")
    if mask is None:
        mask = img.hole_mask
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != img.rgb.shape[:2]:
        raise DomainError("mask dimensions do not match the image")
    if not mask.any():
        return OrthoImage(
            rgb=img.rgb.copy(), hole_mask=np.zeros_like(mask),
            pixel_scale=img.pixel_scale, u_min=img.u_min, v_min=img.v_min,
            crop_offset=img.crop_offset,
        )
    work_mask = mask.copy()
    if dilation > 0:
        work_mask = ndimage.binary_dilation(work_mask, iterations=dilation)
    if work_mask.all():
        raise DomainError("cannot inpaint an image with no known pixels")

    out = img.rgb.astype(np.float64)
    known = ~work_mask
    # Distance-to-known ordering approximates the fast-marching front.
    dist = ndimage.distance_transform_edt(work_mask)
    ys, xs = np.nonzero(work_mask)
    order = np.argsort(dist[ys, xs], kind="stable")
    ys, xs = ys[order], xs[order]

    h, w = work_mask.shape
    win = np.arange(-radius, radius + 1)
    dyy, dxx = np.meshgrid(win, win, indexing="ij")
    d2 = (dyy.astype(np.float64) ** 2 + dxx.astype(np.float64) ** 2)
    in_disc = (d2 <= radius * radius) & (d2 > 0)
    inv_d2 = np.where(in_disc, 1.0 / np.maximum(d2, 1.0), 0.0)

    for y, x in zip(ys.tolist(), xs.tolist()):
        y0, y1 = max(0, y - radius), min(h, y + radius + 1)
        x0, x1 = max(0, x - radius), min(w, x + radius + 1)
        ky0, kx0 = y0 - (y - radius), x0 - (x - radius)
        kw = inv_d2[ky0 : ky0 + (y1 - y0), kx0 : kx0 + (x1 - x0)]
        weights = kw * known[y0:y1, x0:x1]
        total = weights.sum()
        if total <= 0:
            # Isolated deep-hole pixel; widen to the nearest known pixel.
            val = _nearest_known_value(out, known, y, x)
        else:
            val = (weights[..., None] * out[y0:y1, x0:x1]).sum(axis=(0, 1)) / total
        out[y, x] = val
        known[y, x] = True

    return OrthoImage(
        rgb=np.clip(np.rint(out), 0, 255).astype(np.uint8),
        hole_mask=np.zeros_like(mask),
        pixel_scale=img.pixel_scale, u_min=img.u_min, v_min=img.v_min,
        crop_offset=img.crop_offset,
    )


def _nearest_known_value(out, known, y, x):
    kys, kxs = np.nonzero(known)
    d = (kys - y) ** 2 + (kxs - x) ** 2
    i = int(np.argmin(d))
    return out[kys[i], kxs[i]]


def harmonize(
    img: OrthoImage, reference: OrthoImage | None = None
) -> OrthoImage:
    """Per-channel affine map matching non-hole mean/std to the reference.

    No-op without a reference; zero-variance source channels keep the
    identity map. Idempotent against a fixed reference.
    """
    if reference is None:
        return img
    src = img.rgb.astype(np.float64)
    src_valid = src[~img.hole_mask] if img.hole_mask.any() else src.reshape(-1, 3)
    ref = reference.rgb.astype(np.float64)
    ref_valid = (
        ref[~reference.hole_mask] if reference.hole_mask.any() else ref.reshape(-1, 3)
    )
    if len(src_valid) == 0 or len(ref_valid) == 0:
        raise DomainError("harmonize needs nonempty images")
    out = src.copy()
    for c in range(3):
        mu_s, sd_s = src_valid[:, c].mean(), src_valid[:, c].std()
        mu_r, sd_r = ref_valid[:, c].mean(), ref_valid[:, c].std()
        # Zero-variance source: unit scale, mean shift only.
        scale = (sd_r / sd_s) if sd_s > 0 else 1.0
        out[..., c] = (src[..., c] - mu_s) * scale + mu_r
    out = np.clip(np.rint(out), 0, 255).astype(np.uint8)
    out[img.hole_mask] = img.rgb[img.hole_mask]
    return OrthoImage(
        rgb=out, hole_mask=img.hole_mask.copy(), pixel_scale=img.pixel_scale,
        u_min=img.u_min, v_min=img.v_min, crop_offset=img.crop_offset,
    )
