"""Flat key=value pipeline configuration with strict unknown-key rejection."""

from __future__ import annotations

from dataclasses import dataclass, fields

from .errors import IOFailure, ParseError, SchemaError
from .raster import RasterConfig


@dataclass
class PipelineConfig:
    rho: float = 4.0
    r_min: float = 0.02
    r_max: float = 0.50
    p_max: int = 16_777_216
    ssaa: int = 2
    roof_band_frac: float = 0.15
    ground_band: float = 0.12
    m_min: int = 3
    splat_radius_px: float = 2.0
    crop_frac: float = 0.10
    w_sat: float = 1.0
    inpaint_radius: int = 5
    harmonize_ref: str = ""
    swt_levels: int = 3
    swt_filter: str = "haar"
    swt_weights: str = "0.5,0.3,0.2"
    ransac_threshold: float = 0.0     # 0 means scale-relative default
    ransac_iterations: int = 1024
    seed: int = 0
    threads: int = 1

    def raster_config(self) -> RasterConfig:
        return RasterConfig(
            rho=self.rho, r_min=self.r_min, r_max=self.r_max, p_max=self.p_max,
            ssaa=self.ssaa, roof_band_frac=self.roof_band_frac,
            ground_band=self.ground_band, m_min=self.m_min,
            splat_radius_px=self.splat_radius_px, crop_frac=self.crop_frac,
            w_sat=self.w_sat,
        )

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def parse_config_text(text: str, base: PipelineConfig | None = None) -> PipelineConfig:
    cfg = base or PipelineConfig()
    known = {f.name: f.type for f in fields(PipelineConfig)}
    casts = {f.name: type(getattr(cfg, f.name)) for f in fields(PipelineConfig)}
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError("expected key=value", line=i)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise SchemaError(f"unknown config key '{key}'")
        try:
            setattr(cfg, key, casts[key](value))
        except ValueError as exc:
            raise ParseError(f"bad value for '{key}': {exc}", line=i) from exc
    cfg.raster_config()  # validate invariants eagerly
    return cfg


def load_config(path, base: PipelineConfig | None = None) -> PipelineConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc}") from exc
    return parse_config_text(text, base)


def swt_weight_list(cfg: PipelineConfig) -> list[float]:
    return [float(x) for x in cfg.swt_weights.split(",") if x.strip()]
