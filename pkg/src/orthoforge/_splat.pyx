# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled splatting kernels for the layered orthophoto rasterizer.

Both passes deposit each sample onto every pixel whose center lies
within `radius` of the sample position (truncated Gaussian disc).
Parallelism partitions the image into horizontal row bands; every
thread scans all samples but only writes pixels inside its band, so
per-pixel accumulation order equals sample order and the result is
independent of the thread count.
"""

import numpy as np

cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport exp, floor, sqrt

cnp.import_array()


def hmax_pass(
    double[::1] xs,
    double[::1] ys,
    double[::1] hs,
    int width,
    int height,
    double radius,
    int threads=1,
):
    """Per-pixel max height over covering splat footprints; empty pixels -inf."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.full(
        (height, width), -np.inf, dtype=np.float64
    )
    cdef double[:, ::1] hmax = out
    cdef Py_ssize_t n = xs.shape[0]
    cdef int nbands = threads if threads > 0 else 1
    if nbands > height:
        nbands = height
    cdef int band_rows = (height + nbands - 1) // nbands
    cdef double r2 = radius * radius
    cdef int b
    cdef Py_ssize_t i
    cdef int y0, y1, ix, iy, ix_lo, ix_hi, iy_lo, iy_hi
    cdef double x, y, h, dx, dy, d2

    for b in prange(nbands, nogil=True, num_threads=nbands, schedule='static'):
        y0 = b * band_rows
        y1 = y0 + band_rows
        if y1 > height:
            y1 = height
        for i in range(n):
            x = xs[i]
            y = ys[i]
            h = hs[i]
            iy_lo = <int>floor(y - radius - 0.5)
            iy_hi = <int>floor(y + radius - 0.5) + 1
            if iy_lo < y0:
                iy_lo = y0
            if iy_hi >= y1:
                iy_hi = y1 - 1
            if iy_lo > iy_hi:
                continue
            ix_lo = <int>floor(x - radius - 0.5)
            ix_hi = <int>floor(x + radius - 0.5) + 1
            if ix_lo < 0:
                ix_lo = 0
            if ix_hi >= width:
                ix_hi = width - 1
            for iy in range(iy_lo, iy_hi + 1):
                dy = iy + 0.5 - y
                for ix in range(ix_lo, ix_hi + 1):
                    dx = ix + 0.5 - x
                    d2 = dx * dx + dy * dy
                    if d2 <= r2:
                        if h > hmax[iy, ix]:
                            hmax[iy, ix] = h
    return out


def accumulate_pass(
    double[::1] xs,
    double[::1] ys,
    double[::1] hs,
    double[:, ::1] rgb,
    cnp.uint8_t[::1] roof_mask,
    cnp.uint8_t[::1] ground_mask,
    double[:, ::1] hmax,
    double delta,
    double tau,
    double radius,
    double sigma,
    int threads=1,
):
    """Roof band-weighted and ground unweighted accumulation in one sweep."""
    cdef int height = hmax.shape[0]
    cdef int width = hmax.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=3] roof_rgb_a = np.zeros(
        (height, width, 3), dtype=np.float64
    )
    cdef cnp.ndarray[cnp.float64_t, ndim=2] roof_w_a = np.zeros(
        (height, width), dtype=np.float64
    )
    cdef cnp.ndarray[cnp.int32_t, ndim=2] roof_hits_a = np.zeros(
        (height, width), dtype=np.int32
    )
    cdef cnp.ndarray[cnp.float64_t, ndim=3] gnd_rgb_a = np.zeros(
        (height, width, 3), dtype=np.float64
    )
    cdef cnp.ndarray[cnp.float64_t, ndim=2] gnd_w_a = np.zeros(
        (height, width), dtype=np.float64
    )
    cdef cnp.ndarray[cnp.int32_t, ndim=2] gnd_hits_a = np.zeros(
        (height, width), dtype=np.int32
    )
    cdef double[:, :, ::1] roof_rgb = roof_rgb_a
    cdef double[:, ::1] roof_w = roof_w_a
    cdef int[:, ::1] roof_hits = roof_hits_a
    cdef double[:, :, ::1] gnd_rgb = gnd_rgb_a
    cdef double[:, ::1] gnd_w = gnd_w_a
    cdef int[:, ::1] gnd_hits = gnd_hits_a

    cdef Py_ssize_t n = xs.shape[0]
    cdef int nbands = threads if threads > 0 else 1
    if nbands > height:
        nbands = height
    cdef int band_rows = (height + nbands - 1) // nbands
    cdef double r2 = radius * radius
    cdef double inv_2sig2 = 0.5 / (sigma * sigma)
    cdef int b
    cdef Py_ssize_t i
    cdef int y0, y1, ix, iy, ix_lo, ix_hi, iy_lo, iy_hi
    cdef double x, y, h, dx, dy, d2, k, w, hm
    cdef bint is_roof, is_ground

    for b in prange(nbands, nogil=True, num_threads=nbands, schedule='static'):
        y0 = b * band_rows
        y1 = y0 + band_rows
        if y1 > height:
            y1 = height
        for i in range(n):
            is_roof = roof_mask[i] != 0
            is_ground = ground_mask[i] != 0
            if not is_roof and not is_ground:
                continue
            x = xs[i]
            y = ys[i]
            h = hs[i]
            iy_lo = <int>floor(y - radius - 0.5)
            iy_hi = <int>floor(y + radius - 0.5) + 1
            if iy_lo < y0:
                iy_lo = y0
            if iy_hi >= y1:
                iy_hi = y1 - 1
            if iy_lo > iy_hi:
                continue
            ix_lo = <int>floor(x - radius - 0.5)
            ix_hi = <int>floor(x + radius - 0.5) + 1
            if ix_lo < 0:
                ix_lo = 0
            if ix_hi >= width:
                ix_hi = width - 1
            for iy in range(iy_lo, iy_hi + 1):
                dy = iy + 0.5 - y
                for ix in range(ix_lo, ix_hi + 1):
                    dx = ix + 0.5 - x
                    d2 = dx * dx + dy * dy
                    if d2 > r2:
                        continue
                    if is_roof:
                        hm = hmax[iy, ix]
                        if h >= hm - delta:
                            w = exp((h - hm) / tau - d2 * inv_2sig2)
                            roof_rgb[iy, ix, 0] += w * rgb[i, 0]
                            roof_rgb[iy, ix, 1] += w * rgb[i, 1]
                            roof_rgb[iy, ix, 2] += w * rgb[i, 2]
                            roof_w[iy, ix] += w
                            roof_hits[iy, ix] += 1
                    if is_ground:
                        k = exp(-d2 * inv_2sig2)
                        gnd_rgb[iy, ix, 0] += k * rgb[i, 0]
                        gnd_rgb[iy, ix, 1] += k * rgb[i, 1]
                        gnd_rgb[iy, ix, 2] += k * rgb[i, 2]
                        gnd_w[iy, ix] += k
                        gnd_hits[iy, ix] += 1
    return roof_rgb_a, roof_w_a, roof_hits_a, gnd_rgb_a, gnd_w_a, gnd_hits_a
