"""Fusion engine: per-pixel prediction, tiled whole-image prediction and date series."""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from . import _engine
from .errors import ConfigError, GeometryError
from .evaluation import evaluate
from .raster import RasterGrid, ReferencePair, date_ordinal
from .regression import (
    RegressionCoefficients,
    RegressionParams,
    coefficient_limits_check,
    fit_restricted,
)
from .similarity import SimilarityParams, select_similar, spectral_thresholds
from .weights import (
    PixelWeights,
    WeightParams,
    combine_and_normalize,
    gaussian_patch_kernel,
    individual_weight,
    whole_weight,
)

__all__ = [
    "Mode",
    "FusionConfig",
    "FusionTask",
    "PixelPrediction",
    "predict_pixel",
    "predict_image",
    "predict_series",
]


class Mode(str, Enum):
    STNLFFM = "stnlffm"
    STARFM = "starfm_special_case"

    @classmethod
    def parse(cls, value) -> "Mode":
        if isinstance(value, cls):
            return value
        text = str(value).lower()
        if text in ("starfm", "starfm_special_case"):
            return cls.STARFM
        if text == "stnlffm":
            return cls.STNLFFM
        raise ConfigError(f"unknown fusion mode {value!r}")


@dataclass(frozen=True)
class FusionConfig:
    similarity: SimilarityParams = field(default_factory=SimilarityParams)
    weights: WeightParams = field(default_factory=WeightParams)
    regression: RegressionParams = field(default_factory=RegressionParams)
    mode: Mode = Mode.STNLFFM
    tile_size: int = 64
    thread_hint: int = 1

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode.parse(self.mode))
        if self.tile_size < 8:
            raise ConfigError(f"tile_size must be >= 8, got {self.tile_size}")
        if self.thread_hint < 1:
            raise ConfigError(f"thread_hint must be >= 1, got {self.thread_hint}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mode"] = self.mode.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FusionConfig":
        d = dict(d)
        return cls(
            similarity=SimilarityParams(**d.pop("similarity", {})),
            weights=WeightParams(**d.pop("weights", {})),
            regression=RegressionParams(**d.pop("regression", {})),
            **d,
        )


@dataclass(frozen=True)
class FusionTask:
    """Reference pairs plus the coarse image at the prediction date.

    References are kept sorted by date so that results do not depend on the
    order in which they were supplied.
    """

    references: tuple
    coarse_p: RasterGrid
    prediction_date_tag: int | str = 0

    def __post_init__(self):
        refs = tuple(sorted(self.references, key=lambda p: p.day))
        if not refs:
            raise ValueError("at least one reference pair is required")
        for pair in refs:
            pair.fine.require_same_geometry(self.coarse_p, "reference and prediction grids")
        days = [p.day for p in refs]
        if len(set(days)) != len(days):
            raise ValueError("reference date tags must be unique")
        if date_ordinal(self.prediction_date_tag) in days:
            raise ValueError("prediction date coincides with a reference date")
        if len(refs) == 1:
            warnings.warn(
                "only one reference pair supplied; two or more are recommended",
                UserWarning,
                stacklevel=3,
            )
        object.__setattr__(self, "references", refs)

    @property
    def height(self) -> int:
        return self.coarse_p.height

    @property
    def width(self) -> int:
        return self.coarse_p.width

    @property
    def band_count(self) -> int:
        return self.coarse_p.band_count


def _date_masks(task: FusionTask) -> list:
    return [p.fine.valid & p.coarse.valid & task.coarse_p.valid for p in task.references]


@dataclass
class PixelPrediction:
    value: float
    weights: PixelWeights
    coefficients: list
    members: list


def predict_pixel(target, band: int, task: FusionTask, config: FusionConfig = FusionConfig(),
                  *, detail: bool = False, thresholds=None):
    """Predict one fine reflectance value at ``target = (x, y)`` in ``band``.

    Built directly from the public selection, weighting and regression
    operations. Returns ``nan`` for a pixel that cannot be predicted, or a
    :class:`PixelPrediction` when ``detail`` is set.
    """
    x, y = int(target[0]), int(target[1])
    masks = _date_masks(task)
    active = [k for k, m in enumerate(masks) if m[y, x] and task.coarse_p.valid[y, x]]
    if not active:
        return None if detail else float("nan")
    cp = task.coarse_p

    sets, indiv = [], []
    for k in active:
        pair = task.references[k]
        tau = thresholds[k] if thresholds is not None else spectral_thresholds(
            pair.fine, config.similarity.d, config.similarity.classes, masks[k]
        )
        sps = select_similar((x, y), pair.fine, pair.coarse, cp, config.similarity,
                             reference_date_index=k, thresholds=tau, valid=masks[k])
        sets.append(sps)
        indiv.append([
            individual_weight(m, (x, y), pair.coarse, cp, band, config.weights)
            for m in sps.members
        ])
    whole = whole_weight([task.references[k].coarse for k in active], cp, (x, y), band,
                         config.weights)
    weights = combine_and_normalize(indiv, whole)

    value = 0.0
    coeffs = []
    for k, sps, w in zip(active, sets, weights.per_date):
        pair = task.references[k]
        mx, my = sps.members[:, 0], sps.members[:, 1]
        if config.mode is Mode.STARFM:
            a = 1.0
            b = float(cp.data[band, y, x]) - float(pair.coarse.data[band, y, x])
            coeffs.append(RegressionCoefficients(a, b, len(sps), False, b))
        else:
            fit = coefficient_limits_check(
                fit_restricted(pair.coarse.data[band, my, mx], cp.data[band, my, mx],
                               config.regression),
                config.regression,
            )
            a, b = fit.a, fit.b
            coeffs.append(fit)
        fine_vals = pair.fine.data[band, my, mx].astype(np.float64)
        value += float(np.sum(w * (a * fine_vals + b)))
    if detail:
        return PixelPrediction(value, weights, coeffs, sets)
    return value


def _stack(task: FusionTask):
    fine = np.stack([p.fine.data for p in task.references]).astype(np.float64)
    ck = np.stack([p.coarse.data for p in task.references]).astype(np.float64)
    cp = task.coarse_p.data.astype(np.float64)
    ckvalid = np.stack([p.coarse.valid for p in task.references])
    cpvalid = np.ascontiguousarray(task.coarse_p.valid)
    dvalid = np.stack(_date_masks(task))
    # non-finite values may sit under the mask; keep them out of the kernel
    fine = np.where(np.isfinite(fine), fine, 0.0)
    ck = np.where(np.isfinite(ck), ck, 0.0)
    cp = np.where(np.isfinite(cp), cp, 0.0)
    return fine, ck, cp, ckvalid, cpvalid, dvalid


def _tiles(height: int, width: int, size: int):
    for y0 in range(0, height, size):
        for x0 in range(0, width, size):
            yield y0, min(height, y0 + size), x0, min(width, x0 + size)


def predict_image(task: FusionTask, config: FusionConfig = FusionConfig(), *,
                  return_weight_sums: bool = False):
    """Predict the full fine image at the prediction date.

    The raster is processed in ``config.tile_size`` tiles on up to
    ``config.thread_hint`` threads; output is bit-identical for any choice of
    either.

    Returns the predicted :class:`RasterGrid`, or ``(grid, weight_sums)`` with
    ``weight_sums`` of shape ``(bands, height, width)`` holding the total final
    weight used at every pixel.
    """
    fine, ck, cp, ckvalid, cpvalid, dvalid = _stack(task)
    sim, wp, rp = config.similarity, config.weights, config.regression
    K, B, H, W = fine.shape

    tau = np.stack([
        spectral_thresholds(p.fine, sim.d, sim.classes, dvalid[k])
        for k, p in enumerate(task.references)
    ])
    whole_sums = _engine.window_change_sums(ck, cp, ckvalid, cpvalid, wp.whole_window // 2)
    kernel = gaussian_patch_kernel(wp.patch_size, wp.kernel_sigma)

    pred = np.zeros((B, H, W))
    out_valid = np.zeros((H, W), dtype=np.bool_)
    wsum = np.zeros((B, H, W))

    def run(tile):
        y0, y1, x0, x1 = tile
        _engine.predict_tile(
            fine, ck, cp, ckvalid, cpvalid, dvalid, tau, whole_sums, kernel,
            sim.search_window // 2, float(sim.sigma_cc), int(sim.cap),
            float(wp.h), bool(wp.squared), float(wp.epsilon),
            float(rp.gamma), int(rp.min_points), float(rp.variance_floor),
            float(rp.a_min), float(rp.a_max), config.mode is Mode.STARFM,
            y0, y1, x0, x1,
            pred, out_valid, wsum,
        )

    tiles = list(_tiles(H, W, config.tile_size))
    if config.thread_hint == 1:
        for tile in tiles:
            run(tile)
    else:
        with ThreadPoolExecutor(max_workers=config.thread_hint) as pool:
            list(pool.map(run, tiles))

    grid = RasterGrid(pred, out_valid, task.coarse_p.pixel_size)
    if return_weight_sums:
        return grid, wsum
    return grid


# ---------------------------------------------------------------------- series


class Protocol(str, Enum):
    NEAREST_BRACKETING = "nearest_bracketing"
    SYMMETRIC_SWEEP = "symmetric_sweep"


def predict_series(pairs, coarse_series=None, protocol="nearest_bracketing",
                   config: FusionConfig = FusionConfig(), truth=None):
    """Run one of the two date-series experiment protocols.

    Parameters
    ----------
    pairs : list of ReferencePair
        Dated fine/coarse pairs, strictly increasing in date.
    coarse_series : dict, optional
        ``date_tag -> RasterGrid`` coarse image used at each prediction date.
        Defaults to the coarse grid of the pair on that date.
    protocol : {"nearest_bracketing", "symmetric_sweep"}
        ``nearest_bracketing`` predicts every interior date from its two
        neighbours. ``symmetric_sweep`` predicts the middle date from each
        symmetric pair of dates, innermost first.
    truth : dict, optional
        ``date_tag -> RasterGrid`` ground truth; defaults to the pair's fine grid.

    Returns
    -------
    predictions : list of (date_tag, RasterGrid)
    report : list of dict
        One row per prediction with the reference dates, ``interval_days``,
        ``mean_rmse`` and ``mean_r_squared``.
    """
    protocol = Protocol(protocol)
    pairs = list(pairs)
    days = [p.day for p in pairs]
    if any(b <= a for a, b in zip(days, days[1:])):
        raise ValueError("pairs must be strictly increasing in date")
    coarse_by_day = {date_ordinal(k): v for k, v in (coarse_series or {}).items()}
    truth_by_day = {date_ordinal(k): v for k, v in (truth or {}).items()}

    if protocol is Protocol.NEAREST_BRACKETING:
        if len(pairs) < 3:
            raise ValueError("nearest_bracketing needs at least 3 dated pairs")
        jobs = [(i, (i - 1, i + 1)) for i in range(1, len(pairs) - 1)]
    else:
        if len(pairs) < 3 or len(pairs) % 2 == 0:
            raise ValueError("symmetric_sweep needs an odd number (>= 3) of dated pairs")
        mid = len(pairs) // 2
        jobs = [(mid, (mid - j, mid + j)) for j in range(1, mid + 1)]

    predictions, report = [], []
    for target_idx, (lo, hi) in jobs:
        target = pairs[target_idx]
        coarse_p = coarse_by_day.get(target.day, target.coarse)
        task = FusionTask((pairs[lo], pairs[hi]), coarse_p, target.date_tag)
        grid = predict_image(task, config)
        observed = truth_by_day.get(target.day, target.fine)
        ev = evaluate(grid, observed)
        predictions.append((target.date_tag, grid))
        report.append({
            "date": target.date_tag,
            "references": (pairs[lo].date_tag, pairs[hi].date_tag),
            "interval_days": (pairs[hi].day - pairs[lo].day) / 2.0,
            "mode": config.mode.value,
            "mean_rmse": ev.mean_rmse,
            "mean_r_squared": ev.mean_r_squared,
        })
    return predictions, report
