"""Individual (patch), whole (per-date) and final normalised weights."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .raster import RasterGrid

__all__ = [
    "WeightParams",
    "PixelWeights",
    "gaussian_patch_kernel",
    "patch_distance",
    "individual_weight",
    "whole_weight",
    "combine_and_normalize",
]


@dataclass(frozen=True)
class WeightParams:
    """Parameters of the two-level weighting.

    ``squared`` switches the patch distance from kernel-weighted absolute
    differences to kernel-weighted squared differences.
    """

    h: float = 0.15
    kernel_sigma: float = 1.5
    patch_size: int = 5
    whole_window: int = 31
    epsilon: float = 1e-6
    squared: bool = False

    def __post_init__(self):
        if not self.h > 0:
            raise ConfigError(f"h must be positive, got {self.h}")
        if not self.kernel_sigma > 0:
            raise ConfigError(f"kernel_sigma must be positive, got {self.kernel_sigma}")
        if self.patch_size < 1 or self.patch_size % 2 == 0:
            raise ConfigError(f"patch_size must be odd and >= 1, got {self.patch_size}")
        if self.whole_window < 1 or self.whole_window % 2 == 0:
            raise ConfigError(f"whole_window must be odd and >= 1, got {self.whole_window}")
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")


@dataclass
class PixelWeights:
    """Final weights of one target pixel: ``per_date[k][i]`` for member ``i`` of date ``k``."""

    per_date: list

    def total(self) -> float:
        return float(sum(w.sum() for w in self.per_date))


def gaussian_patch_kernel(patch_size: int, sigma: float) -> np.ndarray:
    r = patch_size // 2
    off = np.arange(-r, r + 1, dtype=np.float64)
    return np.exp(-(off[:, None] ** 2 + off[None, :] ** 2) / (2.0 * sigma * sigma))


def patch_distance(member, target, coarse_k: RasterGrid, coarse_p: RasterGrid, band: int,
                   params: WeightParams) -> float:
    """Kernel-weighted distance between the member's patch at the reference
    date and the target's patch at the prediction date.

    Offsets falling outside the image, or on a masked pixel of either patch,
    are dropped and the kernel is renormalised over the remaining ones.
    """
    r = params.patch_size // 2
    kern = gaussian_patch_kernel(params.patch_size, params.kernel_sigma)
    h, w = coarse_k.height, coarse_k.width
    mx, my = int(member[0]), int(member[1])
    tx, ty = int(target[0]), int(target[1])

    oy, ox = np.mgrid[-r : r + 1, -r : r + 1]
    my_, mx_, ty_, tx_ = my + oy, mx + ox, ty + oy, tx + ox
    inside = (
        (my_ >= 0) & (my_ < h) & (mx_ >= 0) & (mx_ < w)
        & (ty_ >= 0) & (ty_ < h) & (tx_ >= 0) & (tx_ < w)
    )
    use = inside.copy()
    use[inside] = coarse_k.valid[my_[inside], mx_[inside]] & coarse_p.valid[ty_[inside], tx_[inside]]
    a = coarse_k.data[band][my_[use], mx_[use]].astype(np.float64)
    b = coarse_p.data[band][ty_[use], tx_[use]].astype(np.float64)
    diff = (a - b) ** 2 if params.squared else np.abs(a - b)
    g = kern[use]
    return float((g * diff).sum() / g.sum())


def individual_weight(member, target, coarse_k: RasterGrid, coarse_p: RasterGrid, band: int,
                      params: WeightParams) -> float:
    """``exp(-distance / h**2)`` for one similar pixel; lies in (0, 1]."""
    dist = patch_distance(member, target, coarse_k, coarse_p, band, params)
    return float(np.exp(-dist / (params.h * params.h)))


def whole_weight(coarse_refs, coarse_p: RasterGrid, target, band: int,
                 params: WeightParams) -> np.ndarray:
    """Per-date weight from the inverse of the summed coarse change in a local window.

    Returns one value per entry of ``coarse_refs``; the values sum to 1.
    """
    r = params.whole_window // 2
    x, y = int(target[0]), int(target[1])
    y0, y1 = max(0, y - r), min(coarse_p.height, y + r + 1)
    x0, x1 = max(0, x - r), min(coarse_p.width, x + r + 1)
    cp = coarse_p.data[band, y0:y1, x0:x1].astype(np.float64)
    inv = []
    for ck_grid in coarse_refs:
        ck = ck_grid.data[band, y0:y1, x0:x1].astype(np.float64)
        use = ck_grid.valid[y0:y1, x0:x1] & coarse_p.valid[y0:y1, x0:x1]
        change = np.abs(ck - cp)[use].sum()
        inv.append(1.0 / (change + params.epsilon))
    inv = np.asarray(inv)
    return inv / inv.sum()


def combine_and_normalize(individual, whole) -> PixelWeights:
    """Normalise individual weights within each date, then scale by that date's whole weight."""
    whole = np.asarray(whole, dtype=np.float64)
    if len(individual) != len(whole):
        raise ValueError("one whole weight is required per date")
    out = []
    for w_ind, w_date in zip(individual, whole):
        w_ind = np.asarray(w_ind, dtype=np.float64)
        if w_ind.size == 0:
            raise ValueError("every date needs at least one member")
        total = w_ind.sum()
        if total > 0:
            norm = w_ind / total
        else:
            norm = np.full(w_ind.shape, 1.0 / w_ind.size)
        out.append(norm * w_date)
    return PixelWeights(out)
