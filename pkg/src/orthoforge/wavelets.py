"""Undecimated (a trous) wavelet transform and the detail/mask/uncertainty losses.

All planes keep the input resolution; boundary handling is periodic so
integer circular shifts commute exactly with the transform. Filters are
the orthonormal Haar and db2 quadrature pairs, dilated per level by
zero insertion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

_SQRT2 = math.sqrt(2.0)
_SQRT3 = math.sqrt(3.0)

FILTERS = {
    "haar": np.array([1.0, 1.0]) / _SQRT2,
    "db2": np.array(
        [1.0 + _SQRT3, 3.0 + _SQRT3, 3.0 - _SQRT3, 1.0 - _SQRT3]
    ) / (4.0 * _SQRT2),
}


def _qmf(h: np.ndarray) -> np.ndarray:
    """High-pass g[k] = (-1)^k h[N-1-k]."""
    g = h[::-1].copy()
    g[1::2] *= -1.0
    return g


def _conv_periodic(x: np.ndarray, taps: np.ndarray, step: int, axis: int) -> np.ndarray:
    """y[n] = sum_k taps[k] * x[(n - k*step) mod N] along ``axis``."""
    out = np.zeros_like(x, dtype=np.float64)
    for k, c in enumerate(taps):
        out += c * np.roll(x, k * step, axis=axis)
    return out


def _adj_periodic(x: np.ndarray, taps: np.ndarray, step: int, axis: int) -> np.ndarray:
    out = np.zeros_like(x, dtype=np.float64)
    for k, c in enumerate(taps):
        out += c * np.roll(x, -k * step, axis=axis)
    return out


@dataclass
class SwtPyramid:
    """Per-level full-resolution detail planes plus the coarse approximation."""

    details: list  # [(horizontal, vertical, diagonal)] for levels 1..L
    approx: np.ndarray
    filter_name: str
    boundary: str = "periodic"

    @property
    def levels(self) -> int:
        return len(self.details)


def _check_input(img: np.ndarray, levels: int, taps: np.ndarray):
    if levels < 1:
        raise DomainError("levels must be >= 1")
    support = (len(taps) - 1) * (1 << (levels - 1)) + 1
    need = max(1 << levels, support)
    if min(img.shape[:2]) < need:
        raise DomainError(
            f"image of shape {img.shape[:2]} is smaller than the level-{levels} "
            f"filter support ({need})"
        )


def swt_forward(img: np.ndarray, levels: int = 3, filter: str = "haar") -> SwtPyramid:
    """A trous decomposition of a single-channel plane.

    Level-j filters are the base pair dilated by inserting 2**(j-1) - 1
    zeros between taps; every output plane is pixel-aligned with the input.
    """
    if filter not in FILTERS:
        raise DomainError(f"unknown filter '{filter}' (choose haar or db2)")
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise DomainError("swt_forward expects a single-channel plane")
    h = FILTERS[filter]
    g = _qmf(h)
    _check_input(img, levels, h)
    approx = img
    details = []
    for j in range(1, levels + 1):
        step = 1 << (j - 1)
        lo_r = _conv_periodic(approx, h, step, axis=0)
        hi_r = _conv_periodic(approx, g, step, axis=0)
        ll = _conv_periodic(lo_r, h, step, axis=1)
        lh = _conv_periodic(lo_r, g, step, axis=1)   # horizontal detail
        hl = _conv_periodic(hi_r, h, step, axis=1)   # vertical detail
        hh = _conv_periodic(hi_r, g, step, axis=1)   # diagonal detail
        details.append((lh, hl, hh))
        approx = ll
    return SwtPyramid(details=details, approx=approx, filter_name=filter)


def swt_inverse(pyr: SwtPyramid) -> np.ndarray:
    """Reconstruct the input plane; exact up to floating round-off."""
    h = FILTERS[pyr.filter_name]
    g = _qmf(h)
    approx = pyr.approx
    for j in range(pyr.levels, 0, -1):
        step = 1 << (j - 1)
        lh, hl, hh = pyr.details[j - 1]
        lo_r = (_adj_periodic(approx, h, step, axis=1)
                + _adj_periodic(lh, g, step, axis=1)) / 2.0
        hi_r = (_adj_periodic(hl, h, step, axis=1)
                + _adj_periodic(hh, g, step, axis=1)) / 2.0
        approx = (_adj_periodic(lo_r, h, step, axis=0)
                  + _adj_periodic(hi_r, g, step, axis=0)) / 2.0
    return approx


def _default_level_weights(levels: int) -> np.ndarray:
    if levels == 3:
        return np.array([0.5, 0.3, 0.2])
    w = np.array([2.0 ** -(j) for j in range(levels)])
    return w / w.sum()


@dataclass
class LossWeights:
    swt_level_weights: np.ndarray = field(
        default_factory=lambda: _default_level_weights(3)
    )
    mask_weights: np.ndarray = field(default_factory=lambda: np.array([1.0]))
    uncertainty_logvars: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.swt_level_weights = np.asarray(self.swt_level_weights, dtype=np.float64)
        self.mask_weights = np.asarray(self.mask_weights, dtype=np.float64)
        if (self.swt_level_weights < 0).any() or (self.mask_weights < 0).any():
            raise DomainError("loss weights must be nonnegative")
        if len(self.swt_level_weights) and not (self.swt_level_weights > 0).any():
            raise DomainError("at least one level weight must be positive")


def _as_channels(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        return img[..., None]
    if img.ndim == 3:
        return img
    raise DomainError("expected a 2D plane or an (H, W, C) image")


def swt_loss(
    a: np.ndarray,
    b: np.ndarray,
    weights: LossWeights | None = None,
    filter: str = "haar",
    levels: int = 3,
    reduce: str = "mean",
) -> float:
    """Weighted per-level detail discrepancy between two images.

    Channels are transformed independently; each level contributes the
    weighted l1 norm over its three detail subbands (mean by default so
    magnitudes are resolution independent, sum with reduce="sum").
    """
    a = _as_channels(a)
    b = _as_channels(b)
    if a.shape != b.shape:
        raise DomainError(f"shape mismatch: {a.shape} vs {b.shape}")
    if weights is None:
        weights = LossWeights(swt_level_weights=_default_level_weights(levels))
    w = weights.swt_level_weights
    if len(w) != levels:
        raise DomainError(f"need {levels} level weights, got {len(w)}")
    if reduce not in ("mean", "sum"):
        raise DomainError("reduce must be 'mean' or 'sum'")
    per_level = np.zeros(levels)
    n_chan = a.shape[2]
    for c in range(n_chan):
        pa = swt_forward(a[..., c], levels=levels, filter=filter)
        pb = swt_forward(b[..., c], levels=levels, filter=filter)
        for j in range(levels):
            for da, db in zip(pa.details[j], pb.details[j]):
                per_level[j] += np.abs(da - db).sum()
    if reduce == "mean":
        per_level /= 3 * n_chan * a.shape[0] * a.shape[1]
    return float((w * per_level).sum())


def mask_loss(
    a: np.ndarray,
    b: np.ndarray,
    masks,
    weights: LossWeights | None = None,
    reduce: str = "mean",
) -> float:
    """Sum over masks of lambda_m * |(a - b) * S_m| averaged over the plane."""
    a = _as_channels(a)
    b = _as_channels(b)
    if a.shape != b.shape:
        raise DomainError(f"shape mismatch: {a.shape} vs {b.shape}")
    masks = [np.asarray(m, dtype=np.float64) for m in masks]
    lam = (
        weights.mask_weights if weights is not None else np.ones(len(masks))
    )
    if len(lam) != len(masks):
        raise DomainError(f"need {len(masks)} mask weights, got {len(lam)}")
    resid = np.abs(a - b)
    total = 0.0
    for m, l in zip(masks, lam):
        if m.shape != a.shape[:2]:
            raise DomainError("mask dimensions do not match the images")
        v = (resid * m[..., None]).sum()
        if reduce == "mean":
            v /= a.size
        total += l * v
    return float(total)


def uncertainty_total(losses, logvars) -> float:
    """sum_i exp(-s_i) * L_i + s_i with fixed log-variances s_i."""
    losses = np.asarray(losses, dtype=np.float64)
    logvars = np.asarray(logvars, dtype=np.float64)
    if losses.shape != logvars.shape:
        raise DomainError("losses and log-variances must have equal length")
    return float((np.exp(-logvars) * losses + logvars).sum())
