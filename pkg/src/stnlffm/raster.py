"""Raster data model, sidecar-header file format, and coarse/fine resampling.

A raster on disk is two files::

    scene.f32          band-sequential, row-major, little-endian float32 payload,
                       followed by width*height mask bytes (0/1) when a mask is present
    scene.f32.json     {"width", "height", "bands", "pixel_size",
                        "dtype": "f32le", "mask": "present" | "absent"}
"""
from __future__ import annotations

import datetime as _dt
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import GeometryError, RasterFormatError

__all__ = [
    "RasterGrid",
    "ReferencePair",
    "read_raster",
    "write_raster",
    "header_path",
    "upsample_cubic",
    "downsample_boxavg",
    "keys_kernel",
    "date_ordinal",
]

KEYS_A = -0.5


@dataclass(frozen=True, eq=False)
class RasterGrid:
    """Multi-band float32 reflectance image with a per-pixel validity mask.

    ``data`` has shape ``(bands, height, width)``; ``valid`` has shape
    ``(height, width)`` and is shared across bands. Both arrays are copied and
    frozen on construction.
    """

    data: np.ndarray
    valid: np.ndarray | None = None
    pixel_size: float = 1.0

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float32, copy=True)
        if data.ndim == 2:
            data = data[None]
        if data.ndim != 3:
            raise GeometryError(f"raster data must be 2-D or 3-D, got shape {data.shape}")
        bands, height, width = data.shape
        if bands < 1 or height < 1 or width < 1:
            raise GeometryError(f"degenerate raster geometry {data.shape}")
        if self.valid is None:
            valid = np.ones((height, width), dtype=bool)
        else:
            valid = np.array(self.valid, dtype=bool, copy=True)
            if valid.shape != (height, width):
                raise GeometryError(
                    f"mask shape {valid.shape} does not match raster {(height, width)}"
                )
        finite = np.isfinite(data).all(axis=0)
        if not finite[valid].all():
            raise RasterFormatError("non-finite reflectance at a valid pixel")
        vals = data[:, valid]
        if vals.size and (vals.min() < 0.0 or vals.max() > 1.0):
            warnings.warn(
                "reflectance outside the nominal [0, 1] range", RuntimeWarning, stacklevel=3
            )
        data.setflags(write=False)
        valid.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "valid", valid)
        object.__setattr__(self, "pixel_size", float(self.pixel_size))

    @property
    def band_count(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    def same_geometry(self, other: "RasterGrid") -> bool:
        return self.data.shape == other.data.shape

    def require_same_geometry(self, other: "RasterGrid", what: str = "rasters") -> None:
        if not self.same_geometry(other):
            raise GeometryError(f"{what} differ in geometry: {self.shape} vs {other.shape}")

    def with_mask(self, valid: np.ndarray) -> "RasterGrid":
        return RasterGrid(self.data, valid, self.pixel_size)


def date_ordinal(tag) -> int:
    """Day number for an ordinal integer or an ISO ``YYYY-MM-DD`` string."""
    if isinstance(tag, (int, np.integer)):
        return int(tag)
    if isinstance(tag, float) and tag.is_integer():
        return int(tag)
    if isinstance(tag, _dt.date):
        return tag.toordinal()
    text = str(tag).strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return _dt.date.fromisoformat(text).toordinal()
    except ValueError:
        raise ValueError(f"unrecognised date tag {tag!r}") from None


@dataclass(frozen=True)
class ReferencePair:
    """Co-registered fine and (fine-geometry) coarse grids acquired on one date."""

    date_tag: int | str
    fine: RasterGrid
    coarse: RasterGrid
    day: int = field(init=False)

    def __post_init__(self):
        self.fine.require_same_geometry(self.coarse, "fine and coarse grids of a reference pair")
        object.__setattr__(self, "day", date_ordinal(self.date_tag))


# --------------------------------------------------------------------------- I/O


def header_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def _payload_path(path) -> Path:
    path = Path(path)
    if path.suffix == ".json" and path.with_suffix("").suffix:
        return path.with_suffix("")
    return path


def write_raster(grid: RasterGrid, path) -> None:
    """Write ``grid`` as a raw payload at ``path`` plus a ``<path>.json`` header."""
    if not isinstance(grid, RasterGrid):
        raise TypeError("write_raster expects a RasterGrid")
    path = _payload_path(path)
    has_mask = not bool(grid.valid.all())
    header = {
        "width": grid.width,
        "height": grid.height,
        "bands": grid.band_count,
        "pixel_size": grid.pixel_size,
        "dtype": "f32le",
        "mask": "present" if has_mask else "absent",
    }
    payload = grid.data.astype("<f4", copy=False).tobytes(order="C")
    if has_mask:
        payload += grid.valid.astype(np.uint8).tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(payload)
    with open(header_path(path), "w") as fh:
        json.dump(header, fh, indent=2)


def read_raster(path) -> RasterGrid:
    """Read a raster written by :func:`write_raster`.

    ``path`` may name either the payload or its ``.json`` header.
    """
    path = _payload_path(path)
    hpath = header_path(path)
    if not path.exists():
        raise FileNotFoundError(f"raster payload not found: {path}")
    if not hpath.exists():
        raise FileNotFoundError(f"raster header not found: {hpath}")
    try:
        header = json.loads(hpath.read_text())
        width, height, bands = int(header["width"]), int(header["height"]), int(header["bands"])
        dtype = header.get("dtype", "f32le")
        mask_mode = header.get("mask", "absent")
        pixel_size = float(header.get("pixel_size", 1.0))
    except (KeyError, TypeError, ValueError) as exc:
        raise RasterFormatError(f"bad raster header {hpath}: {exc}") from exc
    if dtype != "f32le":
        raise RasterFormatError(f"unsupported dtype {dtype!r}")
    if mask_mode not in ("present", "absent"):
        raise RasterFormatError(f"bad mask field {mask_mode!r}")
    if width < 1 or height < 1 or bands < 1:
        raise RasterFormatError(f"degenerate geometry in header {hpath}")

    raw = path.read_bytes()
    n_values = width * height * bands
    expected = 4 * n_values + (width * height if mask_mode == "present" else 0)
    if len(raw) != expected:
        raise RasterFormatError(
            f"{path}: header declares {expected} bytes, payload has {len(raw)}"
        )
    data = np.frombuffer(raw, dtype="<f4", count=n_values).reshape(bands, height, width)
    if mask_mode == "present":
        mask_bytes = np.frombuffer(raw, dtype=np.uint8, offset=4 * n_values)
        if np.any(mask_bytes > 1):
            raise RasterFormatError(f"{path}: mask bytes must be 0 or 1")
        valid = mask_bytes.reshape(height, width).astype(bool)
    else:
        valid = None
    return RasterGrid(data.astype(np.float32), valid, pixel_size)


# ---------------------------------------------------------------------- resampling


def keys_kernel(s, a: float = KEYS_A):
    """Keys cubic-convolution kernel evaluated at offsets ``s``."""
    s = np.abs(np.asarray(s, dtype=np.float64))
    out = np.zeros_like(s)
    near = s <= 1.0
    far = (s > 1.0) & (s < 2.0)
    sn, sf = s[near], s[far]
    out[near] = (a + 2.0) * sn**3 - (a + 3.0) * sn**2 + 1.0
    out[far] = a * sf**3 - 5.0 * a * sf**2 + 8.0 * a * sf - 4.0 * a
    return out


def _cubic_matrix(n_in: int, factor: int) -> np.ndarray:
    # Row j holds the tap weights of output sample j over the (clamped) input samples.
    n_out = n_in * factor
    u = (np.arange(n_out) + 0.5) / factor - 0.5
    base = np.floor(u).astype(int)
    t = u - base
    mat = np.zeros((n_out, n_in))
    rows = np.arange(n_out)
    for tap in (-1, 0, 1, 2):
        idx = np.clip(base + tap, 0, n_in - 1)
        np.add.at(mat, (rows, idx), keys_kernel(t - tap))
    return mat


def upsample_cubic(low: RasterGrid, factor: int) -> RasterGrid:
    """Separable Keys (a = -0.5) cubic-convolution upsampling by an integer factor.

    Borders are replicated. Masked input pixels are excluded by normalised
    convolution; an output pixel is valid when the input pixel containing it is
    valid.
    """
    factor = int(factor)
    if factor < 1:
        raise ValueError(f"upsampling factor must be >= 1, got {factor}")
    if factor == 1:
        return low
    wy = _cubic_matrix(low.height, factor)
    wx = _cubic_matrix(low.width, factor)
    m = low.valid.astype(np.float64)
    vals = np.where(low.valid, low.data.astype(np.float64), 0.0)
    den = wy @ m @ wx.T
    num = wy @ vals @ wx.T
    src_valid = np.repeat(np.repeat(low.valid, factor, axis=0), factor, axis=1)
    valid = src_valid & (den >= 0.5)
    out = np.where(valid, num / np.where(valid, den, 1.0), 0.0)
    return RasterGrid(out, valid, low.pixel_size / factor)


def downsample_boxavg(fine: RasterGrid, factor: int) -> RasterGrid:
    """Mean of the valid pixels in each ``factor x factor`` block."""
    factor = int(factor)
    if factor < 1:
        raise ValueError(f"downsampling factor must be >= 1, got {factor}")
    if fine.height % factor or fine.width % factor:
        raise GeometryError(
            f"raster {fine.height}x{fine.width} not divisible by factor {factor}"
        )
    h, w = fine.height // factor, fine.width // factor
    m = fine.valid.astype(np.float64).reshape(h, factor, w, factor)
    vals = np.where(fine.valid, fine.data.astype(np.float64), 0.0)
    vals = vals.reshape(fine.band_count, h, factor, w, factor)
    count = m.sum(axis=(1, 3))
    total = (vals * m[None]).sum(axis=(2, 4))
    valid = count > 0
    out = np.where(valid, total / np.maximum(count, 1.0), 0.0)
    return RasterGrid(out, valid, fine.pixel_size * factor)
