"""Image ingestion, color transforms and per-region histograms.

Images are held as ``(height, width, 3)`` uint8 arrays in R, G, B order,
which is the row-major, channel-interleaved layout.  Every derived channel
plane carries the analytic value range of its transform so that histogram
bins mean the same thing in every image.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from lccd.errors import DataError, InvalidInputError

log = logging.getLogger(__name__)

RAW_IMAGE_MAGIC = b"LCCDIMG1"

SQRT2 = np.sqrt(2.0)
SQRT3 = np.sqrt(3.0)
SQRT6 = np.sqrt(6.0)

# analytic ranges of the opponent transform for 8-bit input
OPPONENT_RANGES = {
    "O1": (-255.0 / SQRT2, 255.0 / SQRT2),
    "O2": (-510.0 / SQRT6, 510.0 / SQRT6),
    "O3": (0.0, 765.0 / SQRT3),
}
RGB_RANGE = (0.0, 255.0)


@dataclass(frozen=True)
class RasterImage:
    """A decoded 8-bit RGB image.

    Parameters
    ----------
    data : ndarray, shape (height, width, 3), dtype uint8
    """

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 3 or data.shape[2] != 3:
            raise InvalidInputError(f"expected (H, W, 3) image, got shape {data.shape}")
        if data.shape[0] == 0 or data.shape[1] == 0:
            raise InvalidInputError("image has a zero dimension")
        if data.dtype != np.uint8:
            raise InvalidInputError(f"expected uint8 samples, got {data.dtype}")
        object.__setattr__(self, "data", np.ascontiguousarray(data))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def tobytes(self) -> bytes:
        return self.data.tobytes()


@dataclass(frozen=True)
class ChannelPlane:
    """One real-valued channel with its declared value range ``[lo, hi]``."""

    values: np.ndarray
    lo: float
    hi: float
    name: str = ""

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass
class RegionHistogramGrid:
    """Per-channel region histograms, each of shape ``(rows, cols, bins)``."""

    per_channel: dict[str, np.ndarray]
    empty_regions: dict[str, int] = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, int, int]:
        first = next(iter(self.per_channel.values()))
        return first.shape

    def __getitem__(self, channel: str) -> np.ndarray:
        return self.per_channel[channel]


def resize_image(img: RasterImage, target_w: int, target_h: int) -> RasterImage:
    """Bilinear resize to exactly ``target_w`` x ``target_h``.

    Uses pixel-center alignment with edge clamping, so an identity resize
    returns the input bytes unchanged and corner pixels map to corners when
    upsampling.
    """
    if target_w < 3 or target_h < 3:
        raise InvalidInputError(f"target size {target_w}x{target_h} is below 3x3")
    if (target_w, target_h) == (img.width, img.height):
        return RasterImage(img.data.copy())

    src = img.data.astype(np.float64)
    y0, y1, wy = _bilinear_taps(img.height, target_h)
    x0, x1, wx = _bilinear_taps(img.width, target_w)
    wy = wy[:, None, None]
    wx = wx[None, :, None]
    top = src[y0][:, x0] * (1.0 - wx) + src[y0][:, x1] * wx
    bottom = src[y1][:, x0] * (1.0 - wx) + src[y1][:, x1] * wx
    out = top * (1.0 - wy) + bottom * wy
    return RasterImage(np.clip(np.rint(out), 0, 255).astype(np.uint8))


def _bilinear_taps(src_len: int, dst_len: int):
    coords = (np.arange(dst_len) + 0.5) * (src_len / dst_len) - 0.5
    coords = np.clip(coords, 0.0, src_len - 1)
    lo = np.floor(coords).astype(np.intp)
    hi = np.minimum(lo + 1, src_len - 1)
    return lo, hi, coords - lo


def to_opponent(img: RasterImage) -> tuple[ChannelPlane, ChannelPlane, ChannelPlane]:
    """Opponent color planes O1 = (R-G)/sqrt2, O2 = (R+G-2B)/sqrt6, O3 = (R+G+B)/sqrt3."""
    rgb = img.data.astype(np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    o1 = (r - g) / SQRT2
    o2 = (r + g - 2.0 * b) / SQRT6
    o3 = (r + g + b) / SQRT3
    return tuple(
        ChannelPlane(vals, *OPPONENT_RANGES[name], name=name)
        for name, vals in (("O1", o1), ("O2", o2), ("O3", o3))
    )


def split_rgb(img: RasterImage) -> tuple[ChannelPlane, ChannelPlane, ChannelPlane]:
    return tuple(
        ChannelPlane(img.data[..., i].astype(np.float64), *RGB_RANGE, name=name)
        for i, name in enumerate("RGB")
    )


def merge_rgb(r: ChannelPlane, g: ChannelPlane, b: ChannelPlane) -> RasterImage:
    """Inverse of :func:`split_rgb`."""
    stacked = np.stack([r.values, g.values, b.values], axis=-1)
    return RasterImage(stacked.astype(np.uint8))


def region_bounds(length: int, parts: int) -> np.ndarray:
    """Floor-partition boundaries: region ``i`` spans ``[b[i], b[i+1])``."""
    return (np.arange(parts + 1) * length) // parts


def compute_region_histograms(
    plane: ChannelPlane, grid_rows: int, grid_cols: int, bins: int
) -> np.ndarray:
    """Normalized ``bins``-bin histograms of every region of a floor-partitioned grid.

    Parameters
    ----------
    plane : ChannelPlane
        Values are binned uniformly over ``[plane.lo, plane.hi]``.
    grid_rows, grid_cols : int
        Grid size; region ``(r, c)`` covers rows ``floor(r*H/rows)`` up to
        ``floor((r+1)*H/rows) - 1`` and likewise for columns.
    bins : int

    Returns
    -------
    ndarray, shape (grid_rows, grid_cols, bins)
        Each histogram sums to one.  Regions without pixels get the uniform
        histogram ``1/bins``.
    """
    hist, _ = _region_histograms(plane, grid_rows, grid_cols, bins)
    return hist


def _region_histograms(plane, grid_rows, grid_cols, bins):
    if grid_rows < 3 or grid_cols < 3:
        raise InvalidInputError(f"grid {grid_rows}x{grid_cols} is smaller than 3x3")
    if bins < 2:
        raise InvalidInputError(f"need at least 2 bins, got {bins}")
    h, w = plane.values.shape
    if h < grid_rows or w < grid_cols:
        raise InvalidInputError(
            f"plane {w}x{h} is smaller than the {grid_cols}x{grid_rows} grid"
        )
    if not plane.hi > plane.lo:
        raise InvalidInputError(f"empty value range [{plane.lo}, {plane.hi}]")

    scaled = (plane.values - plane.lo) / (plane.hi - plane.lo) * bins
    bin_idx = np.clip(np.floor(scaled).astype(np.intp), 0, bins - 1)

    row_region = np.searchsorted(region_bounds(h, grid_rows), np.arange(h), side="right") - 1
    col_region = np.searchsorted(region_bounds(w, grid_cols), np.arange(w), side="right") - 1
    region = row_region[:, None] * grid_cols + col_region[None, :]

    flat = (region * bins + bin_idx).ravel()
    counts = np.bincount(flat, minlength=grid_rows * grid_cols * bins)
    counts = counts.reshape(grid_rows, grid_cols, bins).astype(np.float64)
    totals = counts.sum(axis=-1, keepdims=True)

    empty = totals[..., 0] == 0
    n_empty = int(empty.sum())
    with np.errstate(invalid="ignore", divide="ignore"):
        hist = counts / totals
    if n_empty:
        log.warning("%d empty region(s) in plane %s; using uniform histograms",
                    n_empty, plane.name or "?")
        hist[empty] = 1.0 / bins
    return hist, n_empty


def histogram_grid(planes, grid_rows: int, grid_cols: int, bins: int) -> RegionHistogramGrid:
    """Histogram every plane of ``planes`` on the same grid, keyed by plane name."""
    per_channel, empty = {}, {}
    for plane in planes:
        per_channel[plane.name], empty[plane.name] = _region_histograms(
            plane, grid_rows, grid_cols, bins
        )
    return RegionHistogramGrid(per_channel, empty)


# --- file ingestion -------------------------------------------------------


def read_raw_image(path) -> RasterImage:
    """Read an ``LCCDIMG1`` dump: magic, u32 width, u32 height, u8 channels,
    then one full plane of u8 samples per channel."""
    payload = Path(path).read_bytes()
    header = struct.Struct("<8sIIB")
    if len(payload) < header.size or payload[:8] != RAW_IMAGE_MAGIC:
        raise DataError(f"{path}: not an LCCDIMG1 file")
    _, width, height, channels = header.unpack_from(payload)
    if channels != 3:
        raise DataError(f"{path}: expected 3 channels, found {channels}")
    n = width * height * channels
    body = payload[header.size:]
    if len(body) != n:
        raise DataError(f"{path}: expected {n} samples, found {len(body)}")
    planes = np.frombuffer(body, dtype=np.uint8).reshape(channels, height, width)
    return RasterImage(np.transpose(planes, (1, 2, 0)))


def write_raw_image(path, img: RasterImage) -> None:
    header = struct.pack("<8sIIB", RAW_IMAGE_MAGIC, img.width, img.height, 3)
    planes = np.transpose(img.data, (2, 0, 1))
    Path(path).write_bytes(header + np.ascontiguousarray(planes).tobytes())


def load_image(path) -> RasterImage:
    """Decode a PNG/JPEG (via Pillow) or an ``LCCDIMG1`` raw dump."""
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(8)
    if magic == RAW_IMAGE_MAGIC:
        return read_raw_image(path)

    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as im:
            arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except (UnidentifiedImageError, OSError) as exc:
        raise DataError(f"{path}: cannot decode image ({exc})") from exc
    return RasterImage(arr)
