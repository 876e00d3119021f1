"""Pure-numpy fallback for the splatting kernels.

Semantics match orthoforge._splat; accumulation order differs, so
results agree with the compiled kernels only to floating-point
round-off. Selected automatically when the extension is missing, or
forced with ORTHOFORGE_BACKEND=python.
"""

from __future__ import annotations

import numpy as np


def _footprint_offsets(radius: float):
    reach = int(np.floor(radius + 0.5)) + 1
    return [(dy, dx) for dy in range(-reach, reach + 1) for dx in range(-reach, reach + 1)]


def hmax_pass(xs, ys, hs, width, height, radius, threads=1):
    hmax = np.full((height, width), -np.inf, dtype=np.float64)
    ix0 = np.floor(xs).astype(np.int64)
    iy0 = np.floor(ys).astype(np.int64)
    r2 = radius * radius
    for dy, dx in _footprint_offsets(radius):
        ix = ix0 + dx
        iy = iy0 + dy
        ddx = ix + 0.5 - xs
        ddy = iy + 0.5 - ys
        sel = (
            (ddx * ddx + ddy * ddy <= r2)
            & (ix >= 0) & (ix < width) & (iy >= 0) & (iy < height)
        )
        np.maximum.at(hmax, (iy[sel], ix[sel]), hs[sel])
    return hmax


def accumulate_pass(
    xs, ys, hs, rgb, roof_mask, ground_mask, hmax,
    delta, tau, radius, sigma, threads=1,
):
    height, width = hmax.shape
    roof_rgb = np.zeros((height, width, 3), dtype=np.float64)
    roof_w = np.zeros((height, width), dtype=np.float64)
    roof_hits = np.zeros((height, width), dtype=np.int32)
    gnd_rgb = np.zeros((height, width, 3), dtype=np.float64)
    gnd_w = np.zeros((height, width), dtype=np.float64)
    gnd_hits = np.zeros((height, width), dtype=np.int32)

    ix0 = np.floor(xs).astype(np.int64)
    iy0 = np.floor(ys).astype(np.int64)
    r2 = radius * radius
    inv_2sig2 = 0.5 / (sigma * sigma)
    roof = roof_mask.astype(bool)
    ground = ground_mask.astype(bool)
    for dy, dx in _footprint_offsets(radius):
        ix = ix0 + dx
        iy = iy0 + dy
        ddx = ix + 0.5 - xs
        ddy = iy + 0.5 - ys
        d2 = ddx * ddx + ddy * ddy
        inside = (
            (d2 <= r2) & (ix >= 0) & (ix < width) & (iy >= 0) & (iy < height)
        )
        sel = inside & roof
        if sel.any():
            i_sel = (iy[sel], ix[sel])
            hm = hmax[i_sel]
            band = hs[sel] >= hm - delta
            if band.any():
                i_sel = (i_sel[0][band], i_sel[1][band])
                w = np.exp((hs[sel][band] - hm[band]) / tau - d2[sel][band] * inv_2sig2)
                for c in range(3):
                    np.add.at(roof_rgb[..., c], i_sel, w * rgb[sel][band][:, c])
                np.add.at(roof_w, i_sel, w)
                np.add.at(roof_hits, i_sel, 1)
        sel = inside & ground
        if sel.any():
            i_sel = (iy[sel], ix[sel])
            k = np.exp(-d2[sel] * inv_2sig2)
            for c in range(3):
                np.add.at(gnd_rgb[..., c], i_sel, k * rgb[sel][:, c])
            np.add.at(gnd_w, i_sel, k)
            np.add.at(gnd_hits, i_sel, 1)
    return roof_rgb, roof_w, roof_hits, gnd_rgb, gnd_w, gnd_hits
