"""RMSE and squared-correlation agreement between predicted and observed rasters."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError
from .raster import RasterGrid

__all__ = ["EvalReport", "rmse", "r_squared", "evaluate"]


def _pair(predicted, observed, min_len):
    p = np.asarray(predicted, dtype=np.float64).ravel()
    o = np.asarray(observed, dtype=np.float64).ravel()
    if p.shape != o.shape:
        raise ValueError(f"length mismatch: {p.size} vs {o.size}")
    if p.size < min_len:
        raise ValueError(f"need at least {min_len} values, got {p.size}")
    return p, o


def rmse(predicted, observed) -> float:
    p, o = _pair(predicted, observed, 1)
    d = p - o
    return math.sqrt(float(d @ d) / d.size)


def r_squared(predicted, observed) -> float:
    """Squared Pearson correlation. ``nan`` when either input is constant."""
    p, o = _pair(predicted, observed, 2)
    dp = p - p.mean()
    do = o - o.mean()
    sp = float(dp @ dp)
    so = float(do @ do)
    if sp == 0.0 or so == 0.0:
        return float("nan")
    r = float(dp @ do) / (math.sqrt(sp) * math.sqrt(so))
    return min(1.0, r * r)


@dataclass
class EvalReport:
    rmse: list
    r_squared: list
    n_pixels: int

    @property
    def mean_rmse(self) -> float:
        return float(np.mean(self.rmse))

    @property
    def mean_r_squared(self) -> float:
        vals = [v for v in self.r_squared if not math.isnan(v)]
        return float(np.mean(vals)) if vals else float("nan")

    @property
    def r_squared_missing(self) -> list:
        return [i for i, v in enumerate(self.r_squared) if math.isnan(v)]

    def rows(self) -> list:
        out = [
            {"band": str(i), "rmse": e, "r_squared": None if math.isnan(r) else r,
             "n_pixels": self.n_pixels}
            for i, (e, r) in enumerate(zip(self.rmse, self.r_squared))
        ]
        mean_r2 = self.mean_r_squared
        out.append({"band": "mean", "rmse": self.mean_rmse,
                    "r_squared": None if math.isnan(mean_r2) else mean_r2,
                    "n_pixels": self.n_pixels})
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=["band", "rmse", "r_squared", "n_pixels"],
                                lineterminator="\n")
        writer.writeheader()
        for row in self.rows():
            writer.writerow({k: ("" if v is None else (repr(v) if isinstance(v, float) else v))
                             for k, v in row.items()})
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"bands": self.rows(), "r_squared_missing": self.r_squared_missing},
                          indent=2)


def evaluate(predicted: RasterGrid, observed: RasterGrid) -> EvalReport:
    """Per-band RMSE and R^2 over pixels valid in both rasters."""
    if predicted.shape != observed.shape:
        raise GeometryError(f"geometry mismatch: {predicted.shape} vs {observed.shape}")
    valid = predicted.valid & observed.valid
    n = int(valid.sum())
    if n == 0:
        raise GeometryError("no jointly valid pixels")
    errs, r2s = [], []
    for b in range(predicted.band_count):
        p = predicted.data[b][valid]
        o = observed.data[b][valid]
        errs.append(rmse(p, o))
        r2s.append(r_squared(p, o) if n >= 2 else float("nan"))
    return EvalReport(errs, r2s, n)
