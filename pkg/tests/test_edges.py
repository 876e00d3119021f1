"""Canny edge detector behavior on synthetic patterns."""

import numpy as np
import pytest

from orthoforge.edges import canny_edges, to_grayscale
from orthoforge.errors import DomainError


def test_grayscale_luma():
    img = np.zeros((2, 2, 3))
    img[..., 1] = 100.0
    np.testing.assert_allclose(to_grayscale(img), 58.7)


def test_flat_image_no_edges():
    assert canny_edges(np.full((32, 32), 80.0)).sum() == 0


def test_step_edge_single_response():
    img = np.zeros((40, 40))
    img[:, 20:] = 255.0
    edges = canny_edges(img, sigma=1.0)
    # One thin vertical line near column 20, away from the borders.
    interior = edges[5:-5]
    cols = np.nonzero(interior.any(axis=0))[0]
    assert len(cols) >= 1
    assert np.all(np.abs(cols - 19.5) <= 2.0)
    # NMS keeps the line at most 2 px wide.
    assert interior.sum(axis=1).max() <= 2


def test_square_outline_detected():
    img = np.zeros((60, 60))
    img[20:40, 20:40] = 200.0
    edges = canny_edges(img, sigma=1.0)
    ys, xs = np.nonzero(edges)
    assert len(ys) > 0
    # All edge pixels hug the square boundary.
    near_y = (np.abs(ys - 19.5) <= 2.5) | (np.abs(ys - 39.5) <= 2.5)
    near_x = (np.abs(xs - 19.5) <= 2.5) | (np.abs(xs - 39.5) <= 2.5)
    assert np.all(near_y | near_x)


def test_hysteresis_keeps_connected_weak_edges():
    # A ramp edge whose ends are weaker still survives when connected to
    # a strong middle; an isolated weak blob does not.
    img = np.zeros((40, 80))
    img[:, 40:] = 255.0
    strong = canny_edges(img, low_frac=0.1, high_frac=0.3)
    assert strong.sum() > 0
    weak_only = np.zeros((40, 80))
    weak_only[18:22, 10:14] = 10.0   # tiny, low-contrast blob
    weak_only[:, 40:] = 255.0
    edges = canny_edges(weak_only, low_frac=0.1, high_frac=0.3)
    assert not edges[15:25, 5:20].any()


def test_rgb_input_accepted():
    img = np.zeros((30, 30, 3), dtype=np.uint8)
    img[:, 15:] = 255
    assert canny_edges(img).sum() > 0


def test_threshold_validation():
    with pytest.raises(DomainError):
        canny_edges(np.zeros((10, 10)), low_frac=0.5, high_frac=0.2)
    with pytest.raises(DomainError):
        canny_edges(np.zeros((10, 10)), low_frac=0.0, high_frac=0.3)


def test_output_is_binary():
    img = np.zeros((30, 30))
    img[:, 15:] = 128.0
    edges = canny_edges(img)
    assert set(np.unique(edges)) <= {0.0, 1.0}
