"""Canny edge maps used as structural masks.

Gaussian smoothing, Sobel gradients, 4-direction quantized non-maximum
suppression, and double-threshold hysteresis with thresholds given as
fractions of the maximum gradient magnitude.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .errors import DomainError

LUMA = np.array([0.299, 0.587, 0.114])

_SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
_SOBEL_Y = _SOBEL_X.T


def to_grayscale(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        return img
    if img.ndim == 3 and img.shape[2] == 3:
        return img @ LUMA
    raise DomainError("expected a grayscale or RGB image")


def canny_edges(
    img: np.ndarray,
    sigma: float = 1.4,
    low_frac: float = 0.1,
    high_frac: float = 0.3,
) -> np.ndarray:
    """Binary {0, 1} edge mask."""
    if not (0 < low_frac < high_frac <= 1):
        raise DomainError("require 0 < low_frac < high_frac <= 1")
    gray = to_grayscale(img)
    smoothed = ndimage.gaussian_filter(gray, sigma=sigma, mode="nearest")
    gx = ndimage.convolve(smoothed, _SOBEL_X, mode="nearest")
    gy = ndimage.convolve(smoothed, _SOBEL_Y, mode="nearest")
    mag = np.hypot(gx, gy)
    if mag.max() <= 0:
        return np.zeros_like(mag)

    nms = _non_maximum_suppression(mag, gx, gy)
    high = high_frac * mag.max()
    low = low_frac * mag.max()
    strong = nms >= high
    weak = nms >= low
    labels, n = ndimage.label(weak, structure=np.ones((3, 3), dtype=int))
    if n == 0:
        return np.zeros_like(mag)
    keep = np.zeros(n + 1, dtype=bool)
    keep[np.unique(labels[strong])] = True
    keep[0] = False
    return keep[labels].astype(np.float64)


def _non_maximum_suppression(mag, gx, gy):
    """Keep pixels that are maxima along the gradient direction quantized
    to horizontal, vertical, or one of the two diagonals."""
    angle = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    padded = np.pad(mag, 1, mode="constant")

    def shifted(dy, dx):
        return padded[1 + dy : 1 + dy + mag.shape[0], 1 + dx : 1 + dx + mag.shape[1]]

    out = np.zeros_like(mag)
    # 0 deg: compare left/right neighbors
    sector = (angle < 22.5) | (angle >= 157.5)
    out = np.where(
        sector & (mag >= shifted(0, 1)) & (mag >= shifted(0, -1)), mag, out
    )
    # 45 deg
    sector = (angle >= 22.5) & (angle < 67.5)
    out = np.where(
        sector & (mag >= shifted(1, 1)) & (mag >= shifted(-1, -1)), mag, out
    )
    # 90 deg
    sector = (angle >= 67.5) & (angle < 112.5)
    out = np.where(
        sector & (mag >= shifted(1, 0)) & (mag >= shifted(-1, 0)), mag, out
    )
    # 135 deg
    sector = (angle >= 112.5) & (angle < 157.5)
    out = np.where(
        sector & (mag >= shifted(1, -1)) & (mag >= shifted(-1, 1)), mag, out
    )
    return out
