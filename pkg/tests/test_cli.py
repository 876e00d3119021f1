"""CLI subcommands, exit codes, and the config file."""

import json

import numpy as np
import pytest

from orthoforge import imageio
from orthoforge.cli import main
from orthoforge.config import PipelineConfig, parse_config_text
from orthoforge.errors import ParseError, SchemaError
from orthoforge.pointcloud import save_ply
from orthoforge.raster import OrthoImage
from orthoforge.retrieval import (
    Descriptor,
    DescriptorSet,
    save_descriptor_pack,
)

from conftest import make_plane_cloud


def _kv(output):
    out = {}
    for line in output.strip().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k] = v
    return out


@pytest.fixture
def ply_path(tmp_path):
    path = tmp_path / "cloud.ply"
    save_ply(make_plane_cloud(n=3000, seed=1), path)
    return path


def test_cloud_info(ply_path, capsys):
    assert main(["cloud", "info", str(ply_path)]) == 0
    kv = _kv(capsys.readouterr().out)
    assert kv["count"] == "3000"
    assert kv["dropped"] == "0"


def test_cloud_info_missing_file_exit_3(tmp_path, capsys):
    assert main(["cloud", "info", str(tmp_path / "nope.ply")]) == 3
    assert "category=io" in capsys.readouterr().err


def test_bad_format_exit_4(tmp_path, capsys):
    path = tmp_path / "bad.ply"
    path.write_text("not a ply\n")
    assert main(["cloud", "info", str(path)]) == 4
    assert "category=format" in capsys.readouterr().err


def test_plane_fit(ply_path, capsys):
    assert main(["plane", "fit", str(ply_path), "--seed", "2"]) == 0
    kv = _kv(capsys.readouterr().out)
    n = np.array([float(kv["a"]), float(kv["b"]), float(kv["c"])])
    assert abs(abs(n[2]) - 1.0) < 1e-6


def test_plane_fit_degenerate_exit_5(tmp_path, capsys):
    rng = np.random.Generator(np.random.Philox(0))
    from orthoforge.pointcloud import ColoredPointCloud

    pts = rng.uniform(0, 100, size=(4000, 3))
    path = tmp_path / "noise.ply"
    save_ply(
        ColoredPointCloud(pts, np.zeros((4000, 3), dtype=np.uint8)), path
    )
    assert main(["plane", "fit", str(path), "--threshold", "0.05"]) == 5
    assert "category=geometry" in capsys.readouterr().err


def test_render_writes_image_and_manifest(tmp_path, capsys, small_cloud):
    ply = tmp_path / "city.ply"
    save_ply(small_cloud, ply)
    out = tmp_path / "ortho.png"
    code = main(
        ["render", str(ply), "-o", str(out), "--seed", "3", "--ssaa", "1"]
    )
    assert code == 0
    img = imageio.load_ortho_image(out)
    assert img.width > 10 and img.height > 10
    manifest = json.loads((tmp_path / "ortho.png.manifest.json").read_text())
    assert manifest["schema_version"] == 1
    assert manifest["config"]["ssaa"] == 1
    assert abs(abs(manifest["plane"]["normal"][2]) - 1.0) < 0.01
    # Sidecars exist alongside the image.
    assert (tmp_path / "ortho.holes.png").exists()
    assert (tmp_path / "ortho.georef.txt").exists()


def test_render_bad_flag_exit_6(tmp_path, ply_path, capsys):
    out = tmp_path / "x.png"
    assert main(["render", str(ply_path), "-o", str(out), "--ssaa", "9"]) == 6
    assert "category=domain" in capsys.readouterr().err


def test_usage_error_exit_2(capsys):
    assert main(["no-such-command"]) == 2


def test_warp_and_inpaint(tmp_path, capsys):
    rng = np.random.Generator(np.random.Philox(1))
    img = rng.integers(0, 256, size=(24, 24, 3)).astype(np.uint8)
    src_png = tmp_path / "src.png"
    imageio.save_rgb(img, src_png)
    corr = tmp_path / "corr.csv"
    corr.write_text(
        "0,0,0,23\n23,0,23,23\n23,23,23,0\n0,23,0,0\n"
    )
    out = tmp_path / "warped.png"
    code = main(
        ["warp", str(src_png), "--corr", str(corr), "-o", str(out),
         "--scale", "1.0", "--width", "30", "--height", "30",
         "--umin", "-3", "--vmin", "-3"]
    )
    assert code == 0
    warped = imageio.load_ortho_image(out)
    assert warped.hole_mask.any()
    fixed = tmp_path / "filled.png"
    assert main(["inpaint", str(out), "-o", str(fixed)]) == 0
    assert not imageio.load_ortho_image(fixed).hole_mask.any()


def test_warp_collinear_exit_5(tmp_path, capsys):
    src_png = tmp_path / "src.png"
    imageio.save_rgb(np.zeros((8, 8, 3), dtype=np.uint8), src_png)
    corr = tmp_path / "corr.csv"
    corr.write_text("0,0,0,0\n1,1,1,1\n2,2,2,2\n3,0,0,3\n")
    assert main(
        ["warp", str(src_png), "--corr", str(corr), "-o", str(tmp_path / "o.png")]
    ) == 5


def test_edges_command(tmp_path, capsys):
    img = np.zeros((40, 40, 3), dtype=np.uint8)
    img[:, 20:] = 255
    path = tmp_path / "step.png"
    imageio.save_rgb(img, path)
    out = tmp_path / "edges.png"
    assert main(["edges", str(path), "-o", str(out)]) == 0
    kv = _kv(capsys.readouterr().out)
    assert int(kv["edge_pixels"]) > 0
    assert imageio.load_mask(out).any()


def test_loss_total_command(capsys):
    assert main(["loss", "total", "--losses", "2.0", "--s", "0.6931471805599453"]) == 0
    val = float(capsys.readouterr().out.strip())
    assert val == pytest.approx(1.0 + np.log(2.0), abs=1e-9)


def test_loss_swt_command(tmp_path, capsys):
    rng = np.random.Generator(np.random.Philox(2))
    a = rng.integers(0, 256, size=(32, 32, 3)).astype(np.uint8)
    pa, pb = tmp_path / "a.png", tmp_path / "b.png"
    imageio.save_rgb(a, pa)
    imageio.save_rgb(a, pb)
    assert main(["loss", "swt", str(pa), str(pb)]) == 0
    assert float(capsys.readouterr().out.strip()) == 0.0


def test_retrieve_command(tmp_path, capsys):
    rng = np.random.Generator(np.random.Philox(3))

    def pack(path, n, labels):
        descs = []
        for i in range(n):
            v = rng.normal(size=6)
            v[i % 3] += 4.0
            v /= np.linalg.norm(v)
            descs.append(
                Descriptor(id=f"{path.stem}{i}", vector=v, class_label=labels[i % 3])
            )
        save_descriptor_pack(DescriptorSet(descs), path)

    qp, rp = tmp_path / "q.pack", tmp_path / "r.pack"
    pack(qp, 6, ["a", "b", "c"])
    pack(rp, 12, ["a", "b", "c"])
    report = tmp_path / "report.json"
    code = main(
        ["retrieve", "--queries", str(qp), "--refs", str(rp),
         "--k", "1,5", "--report", str(report)]
    )
    assert code == 0
    kv = _kv(capsys.readouterr().out)
    assert "recall@1" in kv and "ap_mean" in kv
    payload = json.loads(report.read_text())
    assert payload["schema_version"] == 1


def test_fixture_box_city_command(tmp_path, capsys):
    out = tmp_path / "city.ply"
    gt = tmp_path / "gt.png"
    code = main(
        ["fixture", "box-city", "-o", str(out), "--extent", "20",
         "--density", "10", "--seed", "4",
         "--box", "0,0,6,6,4,200,0,0,0,0,200",
         "--ground-truth", str(gt), "--gt-scale", "0.5"]
    )
    assert code == 0
    kv = _kv(capsys.readouterr().out)
    assert int(kv["count"]) > 4000
    assert gt.exists()


def test_compare_command(tmp_path, capsys):
    rng = np.random.Generator(np.random.Philox(5))
    rgb = rng.integers(0, 256, size=(16, 16, 3)).astype(np.uint8)
    img = OrthoImage(rgb=rgb, hole_mask=np.zeros((16, 16), bool), pixel_scale=1.0)
    pa, pb = tmp_path / "a.png", tmp_path / "b.png"
    imageio.save_ortho_image(img, pa)
    imageio.save_ortho_image(img, pb)
    assert main(["compare", str(pa), str(pb)]) == 0
    kv = _kv(capsys.readouterr().out)
    assert float(kv["fraction_within_16"]) == 1.0


def test_config_file_and_overrides(tmp_path):
    cfg_path = tmp_path / "render.cfg"
    cfg_path.write_text("# comment\nssaa = 1\nrho = 8.0\nseed = 42\n")
    from orthoforge.config import load_config

    cfg = load_config(cfg_path)
    assert cfg.ssaa == 1
    assert cfg.rho == 8.0
    assert cfg.seed == 42


def test_config_rejects_unknown_key():
    with pytest.raises(SchemaError, match="unknown config key"):
        parse_config_text("no_such_option = 1\n")


def test_config_parse_error_has_line():
    with pytest.raises(ParseError, match="line 2"):
        parse_config_text("ssaa = 2\nnot a pair\n")
    with pytest.raises(ParseError, match="bad value"):
        parse_config_text("ssaa = two\n")


def test_config_defaults_round_trip():
    cfg = parse_config_text("")
    assert cfg == PipelineConfig()
