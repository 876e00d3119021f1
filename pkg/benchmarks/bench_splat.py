"""Benchmark the compiled splatting kernels against the numpy fallback.

Usage: python3 benchmarks/bench_splat.py [--points N] [--repeat R] [--threads T]

Generates a box-city cloud, converts it to plane coordinates once, and
times rasterize_layers under both backends on the same inputs.
"""

import argparse
import time

import numpy as np

import orthoforge.kernels as kernels
from orthoforge import _splat_py
from orthoforge.fixtures import Box, BoxCityScene, generate_box_city
from orthoforge.plane import fit_plane_ransac, fix_orientation, to_plane_coords
from orthoforge.raster import RasterConfig, rasterize_layers


def make_points(n_target: int):
    # Ground dominates the budget; pick the extent to hit roughly n_target.
    boxes = [
        Box(-12.0, -12.0, 10.0, 10.0, 8.0, (200, 40, 40), (40, 40, 220)),
        Box(12.0, 12.0, 8.0, 12.0, 12.0, (220, 180, 50), (90, 70, 40)),
    ]
    density = 50.0
    extent = float(np.sqrt(max(n_target / density, 100.0)))
    extent = max(extent, 40.0)
    scene = BoxCityScene(
        extent=(extent, extent), boxes=boxes, density=density,
        noise_sigma=0.02, seed=7,
    )
    cloud = generate_box_city(scene)
    plane = fit_plane_ransac(cloud, seed=1)
    pts = to_plane_coords(cloud, plane)
    pts, _ = fix_orientation(pts, plane)
    return pts


def time_backend(pts, cfg, threads, repeat, impl):
    saved = (kernels.hmax_pass, kernels.accumulate_pass)
    kernels.hmax_pass = impl.hmax_pass
    kernels.accumulate_pass = impl.accumulate_pass
    try:
        best = float("inf")
        buf = None
        for _ in range(repeat):
            t0 = time.perf_counter()
            buf = rasterize_layers(pts, cfg, threads=threads)
            best = min(best, time.perf_counter() - t0)
        return best, buf
    finally:
        kernels.hmax_pass, kernels.accumulate_pass = saved


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--points", type=int, default=500_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    pts = make_points(args.points)
    cfg = RasterConfig()
    print(f"points: {len(pts.coords)}  ssaa: {cfg.ssaa}  threads: {args.threads}")
    print(f"active backend at import: {kernels.BACKEND}")

    t_py, buf_py = time_backend(pts, cfg, args.threads, args.repeat, _splat_py)
    print(f"python backend:   {t_py:8.3f} s")

    try:
        from orthoforge import _splat
    except ImportError:
        print("compiled backend: not built (pip install -e . rebuilds it)")
        return
    t_c, buf_c = time_backend(pts, cfg, args.threads, args.repeat, _splat)
    print(f"compiled backend: {t_c:8.3f} s   speedup: {t_py / t_c:5.1f}x")

    agree = (
        np.array_equal(buf_c.roof_hits, buf_py.roof_hits)
        and np.array_equal(buf_c.gnd_hits, buf_py.gnd_hits)
        and np.allclose(buf_c.gnd_rgb, buf_py.gnd_rgb, rtol=1e-10, atol=1e-9)
        and np.allclose(buf_c.roof_rgb, buf_py.roof_rgb, rtol=1e-10, atol=1e-9)
    )
    print(f"backends agree:   {agree}")


if __name__ == "__main__":
    main()
