"""Similar-pixel selection inside a search window.

A candidate is kept for a target when, in every band, its fine reflectance at
the reference date is within a spectral threshold of the target's, and its
coarse temporal change magnitude is within ``sigma_cc`` of the target's.
Coordinates are ``(x, y)`` = ``(column, row)`` throughout.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, GeometryError
from .raster import RasterGrid

__all__ = ["SimilarityParams", "SimilarPixelSet", "spectral_thresholds", "select_similar"]


@dataclass(frozen=True)
class SimilarityParams:
    search_window: int = 31
    d: float = 1.0
    classes: int = 4
    sigma_cc: float = 0.02
    cap: int = 40

    def __post_init__(self):
        if self.search_window < 3 or self.search_window % 2 == 0:
            raise ConfigError(f"search_window must be odd and >= 3, got {self.search_window}")
        if not self.d > 0:
            raise ConfigError(f"d must be positive, got {self.d}")
        if self.classes < 1:
            raise ConfigError(f"classes must be >= 1, got {self.classes}")
        if not self.sigma_cc >= 0:
            raise ConfigError(f"sigma_cc must be non-negative, got {self.sigma_cc}")
        if self.cap < 1:
            raise ConfigError(f"cap must be >= 1, got {self.cap}")


@dataclass(frozen=True)
class SimilarPixelSet:
    """Members selected for one target pixel and one reference date.

    ``members`` is an ``(n, 2)`` integer array of ``(x, y)`` in row-major scan order.
    """

    target: tuple[int, int]
    reference_date_index: int
    members: np.ndarray
    capacity_cap: int
    distances: np.ndarray = field(repr=False, default=None)

    def __len__(self):
        return len(self.members)

    def __contains__(self, xy):
        x, y = xy
        return bool(np.any((self.members[:, 0] == x) & (self.members[:, 1] == y)))


def spectral_thresholds(fine: RasterGrid, d: float, classes: int, valid=None) -> np.ndarray:
    """Per-band threshold ``d * std(band) * 2 / classes`` over valid pixels."""
    valid = fine.valid if valid is None else valid
    vals = fine.data[:, valid].astype(np.float64)
    if vals.shape[1] == 0:
        return np.zeros(fine.band_count)
    return d * vals.std(axis=1) * 2.0 / classes


def select_similar(
    target,
    fine_k: RasterGrid,
    coarse_k: RasterGrid,
    coarse_p: RasterGrid,
    params: SimilarityParams,
    *,
    reference_date_index: int = 0,
    thresholds=None,
    valid=None,
) -> SimilarPixelSet:
    """Select the similar pixels of ``target`` for one reference date.

    Parameters
    ----------
    target : (x, y)
    fine_k, coarse_k : RasterGrid
        Fine and upsampled coarse images at the reference date.
    coarse_p : RasterGrid
        Upsampled coarse image at the prediction date.
    params : SimilarityParams
    thresholds : array, optional
        Per-band spectral thresholds; computed from ``fine_k`` when omitted.
    valid : bool array, optional
        Pixels eligible as candidates. Defaults to the intersection of the three
        input masks.
    """
    fine_k.require_same_geometry(coarse_k, "fine_k and coarse_k")
    fine_k.require_same_geometry(coarse_p, "fine_k and coarse_p")
    if valid is None:
        valid = fine_k.valid & coarse_k.valid & coarse_p.valid
    if thresholds is None:
        thresholds = spectral_thresholds(fine_k, params.d, params.classes, valid)
    thresholds = np.asarray(thresholds, dtype=np.float64)

    x, y = int(target[0]), int(target[1])
    if not (0 <= x < fine_k.width and 0 <= y < fine_k.height):
        raise GeometryError(f"target {(x, y)} outside raster bounds")
    if not valid[y, x]:
        raise ValueError(f"target {(x, y)} is not a valid pixel")

    r = params.search_window // 2
    y0, y1 = max(0, y - r), min(fine_k.height, y + r + 1)
    x0, x1 = max(0, x - r), min(fine_k.width, x + r + 1)

    fine = fine_k.data[:, y0:y1, x0:x1].astype(np.float64)
    change = np.abs(
        coarse_k.data[:, y0:y1, x0:x1].astype(np.float64)
        - coarse_p.data[:, y0:y1, x0:x1].astype(np.float64)
    )
    ty, tx = y - y0, x - x0
    spec_diff = np.abs(fine - fine[:, ty : ty + 1, tx : tx + 1])
    change_diff = np.abs(change - change[:, ty : ty + 1, tx : tx + 1])
    ok = (
        (spec_diff <= thresholds[:, None, None]).all(axis=0)
        & (change_diff < params.sigma_cc).all(axis=0)
        & valid[y0:y1, x0:x1]
    )
    ok[ty, tx] = True

    rows, cols = np.nonzero(ok)  # row-major scan order
    dist = spec_diff.sum(axis=0)[rows, cols]
    if len(rows) > params.cap:
        is_target = (rows == ty) & (cols == tx)
        order = np.flatnonzero(~is_target)
        # stable sort keeps scan order among equal distances
        keep = order[np.argsort(dist[order], kind="stable")[: params.cap - 1]]
        keep = np.sort(np.concatenate([keep, np.flatnonzero(is_target)]))
        rows, cols, dist = rows[keep], cols[keep], dist[keep]

    members = np.stack([cols + x0, rows + y0], axis=1).astype(np.int64)
    return SimilarPixelSet((x, y), reference_date_index, members, params.cap, dist)
