"""End-to-end render + inpaint (+ optional harmonize) with a JSON run manifest."""

from __future__ import annotations

import json
import time

from . import imageio
from .config import PipelineConfig
from .inpaint import harmonize, inpaint
from .pointcloud import load_ply
from .raster import render_orthophoto


def run_pipeline(cloud_path, config: PipelineConfig, out_path, manifest_path=None):
    """Render, inpaint, optionally harmonize; writes the image, hole-mask
    and georef sidecars, and the run manifest. Returns (image, manifest dict)."""
    timings = {}
    t0 = time.perf_counter()
    cloud = load_ply(cloud_path)
    timings["load_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    img, info = render_orthophoto(
        cloud,
        cfg=config.raster_config(),
        seed=config.seed,
        threads=config.threads,
        ransac_threshold=config.ransac_threshold or None,
        ransac_iterations=config.ransac_iterations,
    )
    timings["render_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    img = inpaint(img, radius=config.inpaint_radius)
    timings["inpaint_s"] = time.perf_counter() - t0

    if config.harmonize_ref:
        t0 = time.perf_counter()
        ref = imageio.load_ortho_image(config.harmonize_ref)
        img = harmonize(img, ref)
        timings["harmonize_s"] = time.perf_counter() - t0

    imageio.save_ortho_image(img, out_path)

    plane = info.plane
    manifest = {
        "schema_version": 1,
        "input": str(cloud_path),
        "output": str(out_path),
        "config": config.to_dict(),
        "plane": {
            "normal": [float(x) for x in plane.normal],
            "offset": float(plane.offset),
            "centroid": [float(x) for x in plane.centroid],
            "inlier_fraction": plane.inlier_fraction,
            "threshold": plane.threshold,
        },
        "pixel_scale": info.pixel_scale,
        "base_width": info.base_width,
        "base_height": info.base_height,
        "area_fallback": info.area_fallback,
        "dropped_points": cloud.dropped,
        "timings": timings,
    }
    if manifest_path is None:
        manifest_path = str(out_path) + ".manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
    return img, manifest
