"""Colored point cloud container and PLY I/O.

Supports ascii and binary_little_endian PLY with float32/float64
vertex coordinates and uint8 red/green/blue. Extra vertex properties
(normals etc.) are skipped by stride. binary_big_endian is rejected.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, IOFailure, ParseError, SchemaError

_PLY_SCALAR_SIZES = {
    "char": 1, "int8": 1, "uchar": 1, "uint8": 1,
    "short": 2, "int16": 2, "ushort": 2, "uint16": 2,
    "int": 4, "int32": 4, "uint": 4, "uint32": 4,
    "float": 4, "float32": 4,
    "double": 8, "float64": 8,
}

_PLY_TO_NUMPY = {
    "char": "i1", "int8": "i1", "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2", "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4", "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


@dataclass
class ColoredPointCloud:
    """Positions (N, 3) float64 and colors (N, 3) uint8."""

    points: np.ndarray
    colors: np.ndarray
    dropped: int = 0

    def __post_init__(self):
        self.points = np.ascontiguousarray(self.points, dtype=np.float64)
        self.colors = np.ascontiguousarray(self.colors, dtype=np.uint8)
        if self.points.shape != (len(self.points), 3):
            raise ValueError("points must be (N, 3)")
        if self.colors.shape != self.points.shape:
            raise ValueError("colors must match points shape")

    @property
    def count(self) -> int:
        return len(self.points)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ColoredPointCloud):
            return NotImplemented
        return (
            self.points.shape == other.points.shape
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.colors, other.colors)
        )


@dataclass
class Aabb:
    min_corner: np.ndarray
    max_corner: np.ndarray
    diagonal: float = field(init=False)

    def __post_init__(self):
        self.min_corner = np.asarray(self.min_corner, dtype=np.float64)
        self.max_corner = np.asarray(self.max_corner, dtype=np.float64)
        self.diagonal = float(np.linalg.norm(self.max_corner - self.min_corner))


def bounding_box(cloud: ColoredPointCloud) -> Aabb:
    if cloud.count == 0:
        raise DomainError("bounding_box of an empty cloud")
    return Aabb(cloud.points.min(axis=0), cloud.points.max(axis=0))


def _parse_header(fh):
    """Parse a PLY header; returns (format, vertex_count, vertex_props, line_no)."""
    line = fh.readline()
    line_no = 1
    if line.strip() != b"ply":
        raise ParseError("expected 'ply' magic", line=1)
    fmt = None
    elements = []  # (name, count, props: list[(name, type)])
    while True:
        raw = fh.readline()
        if not raw:
            raise ParseError("unexpected end of header", line=line_no)
        line_no += 1
        line = raw.decode("ascii", errors="replace").strip()
        if not line or line.startswith("comment") or line.startswith("obj_info"):
            continue
        tokens = line.split()
        if tokens[0] == "format":
            if len(tokens) < 2:
                raise ParseError("malformed format line", line=line_no)
            fmt = tokens[1]
            if fmt == "binary_big_endian":
                raise ParseError(
                    "binary_big_endian PLY is not supported "
                    "(only ascii and binary_little_endian)",
                    line=line_no,
                )
            if fmt not in ("ascii", "binary_little_endian"):
                raise ParseError(f"unknown PLY format '{fmt}'", line=line_no)
        elif tokens[0] == "element":
            if len(tokens) != 3:
                raise ParseError("malformed element line", line=line_no)
            try:
                count = int(tokens[2])
            except ValueError:
                raise ParseError("element count is not an integer", line=line_no)
            elements.append((tokens[1], count, []))
        elif tokens[0] == "property":
            if not elements:
                raise ParseError("property before any element", line=line_no)
            if tokens[1] == "list":
                if len(tokens) != 5:
                    raise ParseError("malformed list property", line=line_no)
                elements[-1][2].append((tokens[4], ("list", tokens[2], tokens[3])))
            else:
                if len(tokens) != 3:
                    raise ParseError("malformed property line", line=line_no)
                if tokens[1] not in _PLY_SCALAR_SIZES:
                    raise ParseError(f"unknown property type '{tokens[1]}'", line=line_no)
                elements[-1][2].append((tokens[2], tokens[1]))
        elif tokens[0] == "end_header":
            break
        else:
            raise ParseError(f"unexpected header line '{line}'", line=line_no)
    if fmt is None:
        raise ParseError("header has no format line", line=line_no)
    vertex = None
    for name, count, props in elements:
        if name == "vertex":
            vertex = (count, props)
            break
    if vertex is None:
        raise SchemaError("PLY has no 'vertex' element")
    if elements and elements[0][0] != "vertex":
        raise SchemaError("elements preceding 'vertex' are not supported")
    return fmt, vertex[0], vertex[1], line_no


_REQUIRED = ("x", "y", "z", "red", "green", "blue")


def _check_schema(props):
    names = [n for n, _ in props]
    for req in _REQUIRED:
        if req not in names:
            raise SchemaError(f"vertex element is missing required property '{req}'")
    types = dict(props)
    for axis in ("x", "y", "z"):
        if types[axis] not in ("float", "float32", "double", "float64"):
            raise SchemaError(f"property '{axis}' must be float32 or float64")
    for chan in ("red", "green", "blue"):
        if types[chan] not in ("uchar", "uint8"):
            raise SchemaError(f"property '{chan}' must be uint8")
    for name, typ in props:
        if isinstance(typ, tuple):
            raise SchemaError(f"list property '{name}' in vertex element is not supported")


def load_ply(path) -> ColoredPointCloud:
    """Load a colored point cloud; non-finite vertices are dropped and counted."""
    try:
        fh = open(path, "rb")
    except OSError as exc:
        raise IOFailure(f"cannot open {path}: {exc}") from exc
    with fh:
        fmt, count, props, header_lines = _parse_header(fh)
        _check_schema(props)
        if fmt == "ascii":
            pts, cols = _read_ascii(fh, count, props, header_lines)
        else:
            pts, cols = _read_binary_le(fh, count, props)
    finite = np.isfinite(pts).all(axis=1)
    dropped = int(count - finite.sum())
    return ColoredPointCloud(pts[finite], cols[finite], dropped=dropped)


def _read_ascii(fh, count, props, header_lines):
    names = [n for n, _ in props]
    idx = {n: names.index(n) for n in _REQUIRED}
    pts = np.empty((count, 3), dtype=np.float64)
    cols = np.empty((count, 3), dtype=np.uint8)
    for i in range(count):
        raw = fh.readline()
        if not raw:
            raise IOFailure(
                f"truncated PLY body: expected {count} vertex lines, got {i}"
            )
        tokens = raw.split()
        if len(tokens) < len(names):
            raise ParseError(
                f"vertex line has {len(tokens)} values, expected {len(names)}",
                line=header_lines + 1 + i,
            )
        try:
            pts[i, 0] = float(tokens[idx["x"]])
            pts[i, 1] = float(tokens[idx["y"]])
            pts[i, 2] = float(tokens[idx["z"]])
            cols[i, 0] = int(tokens[idx["red"]])
            cols[i, 1] = int(tokens[idx["green"]])
            cols[i, 2] = int(tokens[idx["blue"]])
        except ValueError as exc:
            raise ParseError(str(exc), line=header_lines + 1 + i) from exc
    return pts, cols


def _read_binary_le(fh, count, props):
    fields = [(name, "<" + _PLY_TO_NUMPY[typ]) for name, typ in props]
    dtype = np.dtype(fields)
    body = fh.read(count * dtype.itemsize)
    if len(body) != count * dtype.itemsize:
        raise IOFailure(
            f"truncated PLY body: expected {count * dtype.itemsize} bytes, "
            f"got {len(body)}"
        )
    rec = np.frombuffer(body, dtype=dtype, count=count)
    pts = np.stack(
        [rec["x"].astype(np.float64), rec["y"].astype(np.float64),
         rec["z"].astype(np.float64)], axis=1,
    )
    cols = np.stack([rec["red"], rec["green"], rec["blue"]], axis=1)
    return pts, cols


def save_ply(cloud: ColoredPointCloud, path) -> None:
    """Write binary_little_endian PLY with float32 coordinates.

    float64 internal coordinates are narrowed to float32 on disk.
    """
    dtype = np.dtype(
        [("x", "<f4"), ("y", "<f4"), ("z", "<f4"),
         ("red", "u1"), ("green", "u1"), ("blue", "u1")]
    )
    rec = np.empty(cloud.count, dtype=dtype)
    pts32 = cloud.points.astype(np.float32)
    rec["x"], rec["y"], rec["z"] = pts32[:, 0], pts32[:, 1], pts32[:, 2]
    rec["red"], rec["green"], rec["blue"] = (
        cloud.colors[:, 0], cloud.colors[:, 1], cloud.colors[:, 2],
    )
    header = (
        "ply\n"
        "format binary_little_endian 1.0\n"
        f"element vertex {cloud.count}\n"
        "property float x\n"
        "property float y\n"
        "property float z\n"
        "property uchar red\n"
        "property uchar green\n"
        "property uchar blue\n"
        "end_header\n"
    )
    tmp = str(path) + ".tmp"
    try:
        with open(tmp, "wb") as fh:
            fh.write(header.encode("ascii"))
            fh.write(rec.tobytes())
        os.replace(tmp, path)
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc
