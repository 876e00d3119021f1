"""PLY I/O: round trips, schema rejection, truncation, non-finite drops."""

import numpy as np
import pytest

from orthoforge.errors import IOFailure, ParseError, SchemaError
from orthoforge.pointcloud import (
    ColoredPointCloud,
    bounding_box,
    load_ply,
    save_ply,
)


def _cloud(n=100, seed=0):
    rng = np.random.Generator(np.random.Philox(seed))
    pts = rng.uniform(-10, 10, size=(n, 3)).astype(np.float32).astype(np.float64)
    cols = rng.integers(0, 256, size=(n, 3)).astype(np.uint8)
    return ColoredPointCloud(pts, cols)


def test_binary_round_trip(tmp_path):
    cloud = _cloud()
    path = tmp_path / "c.ply"
    save_ply(cloud, path)
    back = load_ply(path)
    assert back == cloud
    assert back.dropped == 0


def test_round_trip_is_byte_stable(tmp_path):
    cloud = _cloud(seed=3)
    p1, p2 = tmp_path / "a.ply", tmp_path / "b.ply"
    save_ply(cloud, p1)
    save_ply(load_ply(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_ascii_ply(tmp_path):
    path = tmp_path / "a.ply"
    path.write_text(
        "ply\nformat ascii 1.0\nelement vertex 2\n"
        "property float x\nproperty float y\nproperty float z\n"
        "property uchar red\nproperty uchar green\nproperty uchar blue\n"
        "end_header\n"
        "0 0 0 255 0 0\n"
        "1.5 -2 3 0 128 255\n"
    )
    cloud = load_ply(path)
    assert cloud.count == 2
    np.testing.assert_allclose(cloud.points[1], [1.5, -2, 3])
    assert tuple(cloud.colors[1]) == (0, 128, 255)


def test_ascii_extra_properties_skipped(tmp_path):
    path = tmp_path / "a.ply"
    path.write_text(
        "ply\nformat ascii 1.0\nelement vertex 1\n"
        "property float x\nproperty float y\nproperty float z\n"
        "property float nx\n"
        "property uchar red\nproperty uchar green\nproperty uchar blue\n"
        "end_header\n"
        "1 2 3 0.5 10 20 30\n"
    )
    cloud = load_ply(path)
    np.testing.assert_allclose(cloud.points[0], [1, 2, 3])
    assert tuple(cloud.colors[0]) == (10, 20, 30)


def test_big_endian_rejected(tmp_path):
    path = tmp_path / "a.ply"
    path.write_text(
        "ply\nformat binary_big_endian 1.0\nelement vertex 0\nend_header\n"
    )
    with pytest.raises(ParseError, match="binary_big_endian"):
        load_ply(path)


def test_missing_color_property_is_schema_error(tmp_path):
    path = tmp_path / "a.ply"
    path.write_text(
        "ply\nformat ascii 1.0\nelement vertex 0\n"
        "property float x\nproperty float y\nproperty float z\n"
        "end_header\n"
    )
    with pytest.raises(SchemaError, match="red"):
        load_ply(path)


def test_bad_magic_reports_line(tmp_path):
    path = tmp_path / "a.ply"
    path.write_text("plz\n")
    with pytest.raises(ParseError, match="line 1"):
        load_ply(path)


def test_truncated_binary_body(tmp_path):
    cloud = _cloud(10)
    path = tmp_path / "a.ply"
    save_ply(cloud, path)
    data = path.read_bytes()
    path.write_bytes(data[:-7])
    with pytest.raises(IOFailure, match="truncated"):
        load_ply(path)


def test_truncated_ascii_body(tmp_path):
    path = tmp_path / "a.ply"
    path.write_text(
        "ply\nformat ascii 1.0\nelement vertex 3\n"
        "property float x\nproperty float y\nproperty float z\n"
        "property uchar red\nproperty uchar green\nproperty uchar blue\n"
        "end_header\n"
        "0 0 0 1 2 3\n"
    )
    with pytest.raises(IOFailure, match="expected 3"):
        load_ply(path)


def test_missing_file_is_io_failure(tmp_path):
    with pytest.raises(IOFailure):
        load_ply(tmp_path / "nope.ply")


def test_nonfinite_vertices_dropped(tmp_path):
    path = tmp_path / "a.ply"
    path.write_text(
        "ply\nformat ascii 1.0\nelement vertex 3\n"
        "property float x\nproperty float y\nproperty float z\n"
        "property uchar red\nproperty uchar green\nproperty uchar blue\n"
        "end_header\n"
        "0 0 0 1 2 3\n"
        "nan 0 0 1 2 3\n"
        "1 inf 1 1 2 3\n"
    )
    cloud = load_ply(path)
    assert cloud.count == 1
    assert cloud.dropped == 2


def test_bounding_box():
    cloud = ColoredPointCloud(
        np.array([[0.0, 0, 0], [3.0, 4, 0]]),
        np.zeros((2, 3), dtype=np.uint8),
    )
    box = bounding_box(cloud)
    assert box.diagonal == pytest.approx(5.0)
    np.testing.assert_array_equal(box.min_corner, [0, 0, 0])
    np.testing.assert_array_equal(box.max_corner, [3, 4, 0])
