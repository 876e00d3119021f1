"""PNG image I/O plus the hole-mask and georeferencing sidecars."""

from __future__ import annotations

import numpy as np
from PIL import Image

from .errors import IOFailure, ParseError
from .raster import OrthoImage


def load_rgb(path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("RGB"))
    except FileNotFoundError as exc:
        raise IOFailure(f"cannot open {path}: {exc}") from exc
    except OSError as exc:
        raise ParseError(f"cannot decode {path}: {exc}") from exc


def save_rgb(arr: np.ndarray, path) -> None:
    try:
        Image.fromarray(np.asarray(arr, dtype=np.uint8), mode="RGB").save(path)
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc


def load_mask(path) -> np.ndarray:
    """Single-channel hole mask; 255 (any nonzero) = hole."""
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("L")) > 0
    except FileNotFoundError as exc:
        raise IOFailure(f"cannot open {path}: {exc}") from exc
    except OSError as exc:
        raise ParseError(f"cannot decode {path}: {exc}") from exc


def save_mask(mask: np.ndarray, path) -> None:
    try:
        Image.fromarray(
            np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8), mode="L"
        ).save(path)
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc


def holes_sidecar_path(image_path: str) -> str:
    stem = str(image_path)
    if stem.lower().endswith(".png"):
        stem = stem[:-4]
    return stem + ".holes.png"


def georef_sidecar_path(image_path: str) -> str:
    stem = str(image_path)
    if stem.lower().endswith(".png"):
        stem = stem[:-4]
    return stem + ".georef.txt"


def save_georef(img: OrthoImage, path) -> None:
    lines = [
        f"u_min={img.u_min!r}",
        f"v_min={img.v_min!r}",
        f"r={img.pixel_scale!r}",
        f"crop_offset_x={img.crop_offset[0]}",
        f"crop_offset_y={img.crop_offset[1]}",
    ]
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc


def load_georef(path) -> dict:
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for i, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ParseError("expected key=value", line=i)
                key, value = line.split("=", 1)
                out[key.strip()] = value.strip()
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc}") from exc
    return out


def save_ortho_image(img: OrthoImage, path) -> None:
    """Write the PNG plus the .holes.png and .georef.txt sidecars."""
    save_rgb(img.rgb, path)
    save_mask(img.hole_mask, holes_sidecar_path(path))
    save_georef(img, georef_sidecar_path(path))


def load_ortho_image(path) -> OrthoImage:
    rgb = load_rgb(path)
    holes_path = holes_sidecar_path(path)
    georef_path = georef_sidecar_path(path)
    import os

    holes = (
        load_mask(holes_path)
        if os.path.exists(holes_path)
        else np.zeros(rgb.shape[:2], dtype=bool)
    )
    scale = 1.0
    u_min = v_min = 0.0
    crop = (0, 0)
    if os.path.exists(georef_path):
        geo = load_georef(georef_path)
        scale = float(geo.get("r", 1.0))
        u_min = float(geo.get("u_min", 0.0))
        v_min = float(geo.get("v_min", 0.0))
        crop = (int(geo.get("crop_offset_x", 0)), int(geo.get("crop_offset_y", 0)))
    return OrthoImage(
        rgb=rgb, hole_mask=holes, pixel_scale=scale,
        u_min=u_min, v_min=v_min, crop_offset=crop,
    )
