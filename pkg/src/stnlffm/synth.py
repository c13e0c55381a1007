"""Synthetic fine/coarse reflectance series with exact ground truth.

Each fine pixel belongs to a land-cover class whose reflectance follows a
piecewise-linear trajectory in time. Optional extras: an abrupt offset applied
to some classes after an event date, a fixed per-pixel drift rate that makes
fine-scale texture evolve with time, and additive noise. Coarse images are the
box-averaged noiseless fine image, upsampled back to fine geometry.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .raster import (
    RasterGrid,
    ReferencePair,
    date_ordinal,
    downsample_boxavg,
    read_raster,
    upsample_cubic,
    write_raster,
)

__all__ = [
    "SceneSpec",
    "SeriesFrame",
    "class_map",
    "trajectory_values",
    "generate_series",
    "write_series",
    "read_series",
]

CLASS_MAP_MODES = ("checkerboard", "voronoi_patches", "stripes")


@dataclass
class SceneSpec:
    width: int = 32
    height: int = 32
    band_count: int = 3
    class_count: int = 2
    class_map_mode: str = "checkerboard"
    cell_size: int = 4
    knot_dates: list = field(default_factory=lambda: [0.0, 100.0])
    knot_values: list | None = None  # (class, band, knot); random when None
    event_date: float | None = None
    event_classes: list = field(default_factory=list)
    event_offset: list | None = None  # per band
    noise_sigma: float = 0.0
    coarse_noise_sigma: float = 0.0
    drift_sigma: float = 0.0
    drift_ref_date: float = 0.0
    resolution_ratio: int = 4
    pixel_size: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.class_count < 1:
            raise ConfigError("class_count must be >= 1")
        if self.band_count < 1:
            raise ConfigError("band_count must be >= 1")
        if self.resolution_ratio < 1:
            raise ConfigError("resolution_ratio must be >= 1")
        if self.width % self.resolution_ratio or self.height % self.resolution_ratio:
            raise ConfigError("width and height must be divisible by resolution_ratio")
        if self.class_map_mode not in CLASS_MAP_MODES:
            raise ConfigError(f"class_map_mode must be one of {CLASS_MAP_MODES}")
        if self.cell_size < 1:
            raise ConfigError("cell_size must be >= 1")
        if len(self.knot_dates) < 1 or any(
            b <= a for a, b in zip(self.knot_dates, self.knot_dates[1:])
        ):
            raise ConfigError("knot_dates must be non-empty and strictly increasing")
        if self.knot_values is not None:
            shape = np.shape(self.knot_values)
            want = (self.class_count, self.band_count, len(self.knot_dates))
            if shape != want:
                raise ConfigError(f"knot_values shape {shape} != {want}")
        if self.noise_sigma < 0 or self.coarse_noise_sigma < 0 or self.drift_sigma < 0:
            raise ConfigError("noise and drift scales must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SceneSpec":
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "SceneSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class SeriesFrame:
    date_tag: int | str
    fine: RasterGrid
    coarse: RasterGrid
    truth: RasterGrid

    def pair(self) -> ReferencePair:
        return ReferencePair(self.date_tag, self.fine, self.coarse)


def class_map(spec: SceneSpec, rng: np.random.Generator | None = None) -> np.ndarray:
    """Integer class label per fine pixel, shape ``(height, width)``."""
    m = spec.class_count
    yy, xx = np.mgrid[0 : spec.height, 0 : spec.width]
    i, j = yy // spec.cell_size, xx // spec.cell_size
    if spec.class_map_mode == "checkerboard":
        step = 1 if m <= 3 else m // 2
        return (i + step * j) % m
    if spec.class_map_mode == "stripes":
        return j % m
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    n_seeds = max(m, (spec.width * spec.height) // (spec.cell_size * spec.cell_size))
    sy = rng.uniform(0, spec.height, n_seeds)
    sx = rng.uniform(0, spec.width, n_seeds)
    labels = np.arange(n_seeds) % m
    out = np.empty((spec.height, spec.width), dtype=np.int64)
    # row chunks keep the (rows, width, seeds) distance block near 32 MB
    rows = max(1, 4_000_000 // (spec.width * n_seeds))
    cx = np.arange(spec.width) + 0.5
    for y0 in range(0, spec.height, rows):
        cy = np.arange(y0, min(y0 + rows, spec.height)) + 0.5
        d2 = (cy[:, None, None] - sy) ** 2 + (cx[None, :, None] - sx) ** 2
        out[y0 : y0 + cy.size] = labels[np.argmin(d2, axis=-1)]
    return out


def _random_knots(spec: SceneSpec, rng) -> np.ndarray:
    n = len(spec.knot_dates)
    base = rng.uniform(0.05, 0.45, size=(spec.class_count, spec.band_count))
    steps = rng.uniform(-0.1, 0.1, size=(spec.class_count, spec.band_count, n))
    steps[..., 0] = 0.0
    return np.clip(base[..., None] + np.cumsum(steps, axis=-1), 0.01, 0.95)


def trajectory_values(knot_dates, knot_values, t: float) -> np.ndarray:
    """Piecewise-linear interpolation along the last axis, extrapolated linearly."""
    kd = np.asarray(knot_dates, dtype=np.float64)
    kv = np.asarray(knot_values, dtype=np.float64)
    if kd.size == 1:
        return kv[..., 0].copy()
    seg = int(np.clip(np.searchsorted(kd, t, side="right") - 1, 0, kd.size - 2))
    frac = (t - kd[seg]) / (kd[seg + 1] - kd[seg])
    return kv[..., seg] + frac * (kv[..., seg + 1] - kv[..., seg])


def generate_series(spec: SceneSpec, dates) -> list:
    """Generate one :class:`SeriesFrame` per date. Bit-deterministic per ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    knots = (np.asarray(spec.knot_values, dtype=np.float64) if spec.knot_values is not None
             else _random_knots(spec, rng))
    labels = class_map(spec, rng)
    drift = (rng.normal(0.0, spec.drift_sigma, size=(spec.band_count, spec.height, spec.width))
             if spec.drift_sigma > 0 else None)
    offset = (np.asarray(spec.event_offset, dtype=np.float64)
              if spec.event_offset is not None else np.zeros(spec.band_count))
    affected = np.isin(labels, list(spec.event_classes))

    frames = []
    for tag in dates:
        t = float(date_ordinal(tag))
        per_class = trajectory_values(spec.knot_dates, knots, t)  # (class, band)
        truth = np.transpose(per_class[labels], (2, 0, 1)).copy()
        if spec.event_date is not None and t >= spec.event_date:
            truth[:, affected] += offset[:, None]
        if drift is not None:
            truth += drift * (t - spec.drift_ref_date)
        truth_grid = RasterGrid(truth, pixel_size=spec.pixel_size)

        fine = truth
        if spec.noise_sigma > 0:
            fine = truth + rng.normal(0.0, spec.noise_sigma, size=truth.shape)
        fine_grid = RasterGrid(fine, pixel_size=spec.pixel_size)

        low = downsample_boxavg(truth_grid, spec.resolution_ratio)
        if spec.coarse_noise_sigma > 0:
            low = RasterGrid(low.data + rng.normal(0.0, spec.coarse_noise_sigma, low.shape),
                             low.valid, low.pixel_size)
        coarse_grid = upsample_cubic(low, spec.resolution_ratio)
        frames.append(SeriesFrame(tag, fine_grid, coarse_grid, truth_grid))
    return frames


def write_series(frames, out_dir, spec: SceneSpec | None = None) -> Path:
    """Write frames as rasters plus a ``series.json`` index; returns the index path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for fr in frames:
        stem = str(fr.date_tag)
        names = {kind: f"{kind}_{stem}.f32" for kind in ("fine", "coarse", "truth")}
        write_raster(fr.fine, out_dir / names["fine"])
        write_raster(fr.coarse, out_dir / names["coarse"])
        write_raster(fr.truth, out_dir / names["truth"])
        entries.append({"date": fr.date_tag, **names})
    index = {"frames": entries}
    if spec is not None:
        index["spec"] = spec.to_dict()
    path = out_dir / "series.json"
    path.write_text(json.dumps(index, indent=2))
    return path


def read_series(index_path) -> list:
    index_path = Path(index_path)
    index = json.loads(index_path.read_text())
    base = index_path.parent
    frames = []
    for e in index["frames"]:
        fine = read_raster(base / e["fine"])
        coarse = read_raster(base / e["coarse"])
        truth = read_raster(base / e["truth"]) if e.get("truth") else fine
        frames.append(SeriesFrame(e["date"], fine, coarse, truth))
    return frames
