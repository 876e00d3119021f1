"""orthoforge command-line interface.

Exit codes: 0 ok, 2 usage, 3 IO, 4 format/schema, 5 degenerate geometry,
6 numeric/domain. Errors print `error category=<cat>: <message>` on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import imageio
from .config import PipelineConfig, load_config, swt_weight_list
from .edges import canny_edges
from .errors import OrthoforgeError, UsageError
from .fixtures import Box, BoxCityScene, compare_images, generate_box_city, ground_truth_image
from .inpaint import harmonize, inpaint
from .pipeline import run_pipeline
from .pointcloud import bounding_box, load_ply, save_ply
from .plane import fit_plane_ransac
from .raster import OrthoImage
from .retrieval import evaluate, load_descriptor_pack
from .wavelets import LossWeights, mask_loss, swt_loss, uncertainty_total
from .warp import grid_from_targets, perspective_fallback, WarpGrid


def _print_kv(**kwargs):
    for key, value in kwargs.items():
        print(f"{key}={value}")


def cmd_cloud_info(args):
    cloud = load_ply(args.path)
    box = bounding_box(cloud)
    _print_kv(
        count=cloud.count,
        dropped=cloud.dropped,
        min_x=box.min_corner[0], min_y=box.min_corner[1], min_z=box.min_corner[2],
        max_x=box.max_corner[0], max_y=box.max_corner[1], max_z=box.max_corner[2],
        diagonal=box.diagonal,
    )


def cmd_plane_fit(args):
    cloud = load_ply(args.path)
    plane = fit_plane_ransac(
        cloud, threshold=args.threshold, iterations=args.iters, seed=args.seed
    )
    a, b, c = plane.normal
    _print_kv(
        a=a, b=b, c=c, d=plane.offset,
        inlier_fraction=plane.inlier_fraction,
        threshold=plane.threshold,
        centroid_x=plane.centroid[0],
        centroid_y=plane.centroid[1],
        centroid_z=plane.centroid[2],
    )


def _pipeline_config(args) -> PipelineConfig:
    cfg = PipelineConfig()
    if getattr(args, "config", None):
        cfg = load_config(args.config, cfg)
    overrides = {
        "rho": "rho", "rmin": "r_min", "rmax": "r_max", "pmax": "p_max",
        "ssaa": "ssaa", "roof_band": "roof_band_frac",
        "ground_band": "ground_band", "mmin": "m_min",
        "splat_radius": "splat_radius_px", "crop": "crop_frac",
        "seed": "seed", "threads": "threads",
        "inpaint_radius": "inpaint_radius", "harmonize_ref": "harmonize_ref",
    }
    for arg_name, cfg_name in overrides.items():
        value = getattr(args, arg_name, None)
        if value is not None:
            setattr(cfg, cfg_name, value)
    cfg.raster_config()
    return cfg


def cmd_render(args):
    cfg = _pipeline_config(args)
    _, manifest = run_pipeline(args.cloud, cfg, args.output)
    _print_kv(
        output=args.output,
        pixel_scale=manifest["pixel_scale"],
        base_width=manifest["base_width"],
        base_height=manifest["base_height"],
    )


def cmd_warp(args):
    image = imageio.load_rgb(args.image)
    try:
        rows = np.loadtxt(args.corr, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read correspondences {args.corr}: {exc}") from exc
    if rows.shape[1] != 4:
        raise UsageError("corr.csv rows must be sx,sy,tu,tv")
    src = rows[:, :2]
    dst = rows[:, 2:]
    if args.width and args.height:
        grid = WarpGrid(args.umin, args.vmin, args.scale, args.width, args.height)
    else:
        grid = grid_from_targets(dst, args.scale, margin=args.margin)
    out = perspective_fallback(image, src, dst, grid)
    imageio.save_ortho_image(out, args.output)
    _print_kv(output=args.output, width=out.width, height=out.height)


def cmd_inpaint(args):
    img = imageio.load_ortho_image(args.image)
    if args.mask:
        mask = imageio.load_mask(args.mask)
    else:
        mask = img.hole_mask
    out = inpaint(img, mask=mask, radius=args.radius)
    if args.harmonize_ref:
        out = harmonize(out, imageio.load_ortho_image(args.harmonize_ref))
    imageio.save_ortho_image(out, args.output)
    _print_kv(output=args.output)


def cmd_edges(args):
    img = imageio.load_rgb(args.image)
    mask = canny_edges(
        img, sigma=args.sigma, low_frac=args.low, high_frac=args.high
    )
    imageio.save_mask(mask > 0, args.output)
    _print_kv(output=args.output, edge_pixels=int(mask.sum()))


def _float_list(text):
    return [float(x) for x in text.split(",") if x.strip()]


def cmd_loss_swt(args):
    a = imageio.load_rgb(args.a).astype(np.float64)
    b = imageio.load_rgb(args.b).astype(np.float64)
    weights = LossWeights(swt_level_weights=_float_list(args.weights))
    print(
        swt_loss(a, b, weights=weights, filter=args.filter, levels=args.levels)
    )


def cmd_loss_mask(args):
    a = imageio.load_rgb(args.a).astype(np.float64)
    b = imageio.load_rgb(args.b).astype(np.float64)
    masks = [
        np.asarray(imageio.load_mask(p), dtype=np.float64)
        for p in args.mask.split(",")
    ]
    lambdas = _float_list(args.lam) if args.lam else [1.0] * len(masks)
    weights = LossWeights(mask_weights=np.asarray(lambdas))
    print(mask_loss(a, b, masks, weights=weights))


def cmd_loss_total(args):
    losses = _float_list(args.losses)
    s = _float_list(args.s)
    print(uncertainty_total(losses, s))


def cmd_retrieve(args):
    queries = load_descriptor_pack(args.queries)
    refs = load_descriptor_pack(args.refs)
    ks = [int(k) for k in args.k.split(",") if k.strip()]
    report = evaluate(queries, refs, ks=ks, direction=args.direction)
    payload = report.to_json_dict()
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
    for k in ks:
        print(f"recall@{k}={report.recall_at[k]:.4f}")
    print(f"ap_mean={report.ap_mean:.4f}")
    print(f"excluded={len(report.excluded_queries)}")


def _parse_box(text):
    vals = text.split(",")
    if len(vals) != 11:
        raise UsageError(
            "--box expects cu,cv,w,d,h,roof_r,roof_g,roof_b,wall_r,wall_g,wall_b"
        )
    cu, cv, w, d, h = (float(v) for v in vals[:5])
    roof = tuple(int(v) for v in vals[5:8])
    wall = tuple(int(v) for v in vals[8:11])
    return Box(cu, cv, w, d, h, roof, wall)


def cmd_fixture_box_city(args):
    boxes = [_parse_box(b) for b in args.box or []]
    scene = BoxCityScene(
        extent=(args.extent, args.extent),
        ground_rgb=(40, 140, 40),
        checker_rgb=(90, 90, 90) if args.checker else None,
        checker_cell=args.checker_cell,
        boxes=boxes,
        density=args.density,
        noise_sigma=args.noise,
        seed=args.seed,
    )
    cloud = generate_box_city(scene)
    save_ply(cloud, args.output)
    _print_kv(output=args.output, count=cloud.count)
    if args.ground_truth:
        gt = ground_truth_image(scene, args.gt_scale)
        imageio.save_ortho_image(gt, args.ground_truth)
        _print_kv(ground_truth=args.ground_truth, gt_width=gt.width, gt_height=gt.height)


def cmd_compare(args):
    a = imageio.load_ortho_image(args.a)
    b = imageio.load_ortho_image(args.b)
    rep = compare_images(a, b, exclude_holes=args.exclude_holes)
    _print_kv(
        mean_abs_diff_r=rep.mean_abs_diff[0],
        mean_abs_diff_g=rep.mean_abs_diff[1],
        mean_abs_diff_b=rep.mean_abs_diff[2],
        fraction_within_16=rep.fraction_within_16,
        ssim=rep.ssim,
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="orthoforge",
        description="Pseudo-satellite orthophoto rendering, wavelet losses, "
        "and descriptor retrieval evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_cloud = sub.add_parser("cloud", help="point cloud utilities")
    cloud_sub = p_cloud.add_subparsers(dest="subcommand", required=True)
    p = cloud_sub.add_parser("info", help="print count and bounding box")
    p.add_argument("path")
    p.set_defaults(func=cmd_cloud_info)

    p_plane = sub.add_parser("plane", help="ground plane estimation")
    plane_sub = p_plane.add_subparsers(dest="subcommand", required=True)
    p = plane_sub.add_parser("fit", help="RANSAC plane fit")
    p.add_argument("path")
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--iters", type=int, default=1024)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_plane_fit)

    p = sub.add_parser("render", help="render an orthophoto from a point cloud")
    p.add_argument("cloud")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--rho", type=float)
    p.add_argument("--rmin", type=float)
    p.add_argument("--rmax", type=float)
    p.add_argument("--pmax", type=int)
    p.add_argument("--ssaa", type=int)
    p.add_argument("--roof-band", dest="roof_band", type=float)
    p.add_argument("--ground-band", dest="ground_band", type=float)
    p.add_argument("--mmin", type=int)
    p.add_argument("--splat-radius", dest="splat_radius", type=float)
    p.add_argument("--crop", dest="crop", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--inpaint-radius", dest="inpaint_radius", type=int)
    p.add_argument("--harmonize-ref", dest="harmonize_ref")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("warp", help="perspective fallback homography warp")
    p.add_argument("image")
    p.add_argument("--corr", required=True, help="CSV rows sx,sy,tu,tv")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--scale", type=float, default=0.1, help="units per pixel")
    p.add_argument("--margin", type=float, default=0.0)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--umin", type=float, default=0.0)
    p.add_argument("--vmin", type=float, default=0.0)
    p.set_defaults(func=cmd_warp)

    p = sub.add_parser("inpaint", help="fill hole pixels")
    p.add_argument("image")
    p.add_argument("--mask", default=None)
    p.add_argument("--radius", type=int, default=5)
    p.add_argument("--harmonize-ref", dest="harmonize_ref", default=None)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_inpaint)

    p = sub.add_parser("edges", help="Canny edge mask")
    p.add_argument("image")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--sigma", type=float, default=1.4)
    p.add_argument("--low", type=float, default=0.1)
    p.add_argument("--high", type=float, default=0.3)
    p.set_defaults(func=cmd_edges)

    p_loss = sub.add_parser("loss", help="image losses")
    loss_sub = p_loss.add_subparsers(dest="subcommand", required=True)
    p = loss_sub.add_parser("swt", help="wavelet detail loss")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--filter", choices=["haar", "db2"], default="haar")
    p.add_argument("--weights", default="0.5,0.3,0.2")
    p.set_defaults(func=cmd_loss_swt)
    p = loss_sub.add_parser("mask", help="masked l1 loss")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--mask", required=True, help="comma-separated mask PNGs")
    p.add_argument("--lambda", dest="lam", default="")
    p.set_defaults(func=cmd_loss_mask)
    p = loss_sub.add_parser("total", help="uncertainty-weighted combination")
    p.add_argument("--losses", required=True)
    p.add_argument("--s", required=True, help="log-variances")
    p.set_defaults(func=cmd_loss_total)

    p = sub.add_parser("retrieve", help="rank descriptors and report metrics")
    p.add_argument("--queries", required=True)
    p.add_argument("--refs", required=True)
    p.add_argument("--k", default="1,5,10")
    p.add_argument("--report", default=None)
    p.add_argument("--direction", default="")
    p.set_defaults(func=cmd_retrieve)

    p_fix = sub.add_parser("fixture", help="synthetic fixtures")
    fix_sub = p_fix.add_subparsers(dest="subcommand", required=True)
    p = fix_sub.add_parser("box-city", help="generate a box-city cloud")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--extent", type=float, default=100.0)
    p.add_argument("--density", type=float, default=50.0)
    p.add_argument("--noise", type=float, default=0.02)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--checker", action="store_true")
    p.add_argument("--checker-cell", type=float, default=10.0)
    p.add_argument(
        "--box", action="append",
        help="cu,cv,w,d,h,roof_r,roof_g,roof_b,wall_r,wall_g,wall_b (repeatable)",
    )
    p.add_argument("--ground-truth", dest="ground_truth", default=None)
    p.add_argument("--gt-scale", dest="gt_scale", type=float, default=0.25)
    p.set_defaults(func=cmd_fixture_box_city)

    p = sub.add_parser("compare", help="compare two images")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--exclude-holes", action="store_true")
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        args.func(args)
    except OrthoforgeError as exc:
        print(f"error category={exc.category}: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
