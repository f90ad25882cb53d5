"""Dense spatial and channel contrast descriptors over 3x3-region patches."""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from lccd.colorgrid import (
    RasterImage,
    RegionHistogramGrid,
    histogram_grid,
    resize_image,
    split_rgb,
    to_opponent,
)
from lccd.divergence import HELLINGER, DivergenceKind, check_window, window_divergences
from lccd.errors import InvalidConfigError, InvalidInputError

OPPONENT_CHANNELS = ("O1", "O2", "O3")
RGB_CHANNELS = ("R", "G", "B")
VALID_PAIRS = ("RG", "RB", "GB")
DEFAULT_PAIRS = ("RG", "RB")

# (row, col) offsets of the 8 neighbors: top-left, top, top-right, left,
# right, bottom-left, bottom, bottom-right
NEIGHBOR_OFFSETS = ((-1, -1), (-1, 0), (-1, 1), (0, -1),
                    (0, 1), (1, -1), (1, 0), (1, 1))
# the 9 regions of a patch relative to its top-left region, row-major
PATCH_OFFSETS = tuple((dr, dc) for dr in range(3) for dc in range(3))


class Stream(IntEnum):
    SPATIAL = 0
    CHANNEL = 1
    EXTERNAL = 255


@dataclass(frozen=True)
class PatchIndex:
    row: int
    col: int


@dataclass
class PatchDescriptor:
    stream: Stream
    values: np.ndarray
    patch: PatchIndex


@dataclass
class DescriptorSet:
    """All descriptors of one image and stream.

    ``values`` has shape ``(patch_rows * patch_cols, dim)`` with patches in
    row-major order.
    """

    image_id: str
    stream: Stream
    values: np.ndarray
    patch_rows: int
    patch_cols: int

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __len__(self):
        return self.values.shape[0]


def normalize_pairs(pairs) -> tuple[str, ...]:
    pairs = tuple(p.upper() for p in pairs)
    if not pairs:
        raise InvalidConfigError("channel pair list is empty")
    for p in pairs:
        if p not in VALID_PAIRS:
            raise InvalidConfigError(f"unknown channel pair {p!r}; use one of {VALID_PAIRS}")
    return pairs


def spatial_dim(bins: int, window: int) -> int:
    return len(OPPONENT_CHANNELS) * len(NEIGHBOR_OFFSETS) * check_window(bins, window)


def channel_dim(bins: int, window: int, n_pairs: int) -> int:
    return n_pairs * len(PATCH_OFFSETS) * check_window(bins, window)


def _check_patch(shape, patch: PatchIndex):
    rows, cols = shape[:2]
    if not (0 <= patch.row <= rows - 3 and 0 <= patch.col <= cols - 3):
        raise InvalidInputError(f"patch {patch} outside a {rows}x{cols} region grid")


def spatial_contrast_patch(grids: RegionHistogramGrid, patch: PatchIndex,
                           kind: DivergenceKind = HELLINGER,
                           window: int = 3) -> PatchDescriptor:
    """Center-versus-neighbor contrast of one patch.

    Layout: channel O1, O2, O3; within a channel the 8 neighbors in
    :data:`NEIGHBOR_OFFSETS` order; within a neighbor the subspace windows.
    """
    _check_patch(grids.shape, patch)
    cr, cc = patch.row + 1, patch.col + 1
    blocks = []
    for ch in OPPONENT_CHANNELS:
        h = grids[ch]
        center = h[cr, cc]
        for dr, dc in NEIGHBOR_OFFSETS:
            blocks.append(window_divergences(kind, center, h[cr + dr, cc + dc], window))
    return PatchDescriptor(Stream.SPATIAL, np.concatenate(blocks), patch)


def channel_contrast_patch(grids: RegionHistogramGrid, patch: PatchIndex,
                           pairs=DEFAULT_PAIRS, kind: DivergenceKind = HELLINGER,
                           window: int = 3) -> PatchDescriptor:
    """Cross-channel contrast of the 9 regions of one patch.

    Layout: pairs in the given order; within a pair the regions row-major;
    within a region the subspace windows.
    """
    pairs = normalize_pairs(pairs)
    _check_patch(grids.shape, patch)
    blocks = []
    for x, y in pairs:
        hx, hy = grids[x], grids[y]
        for dr, dc in PATCH_OFFSETS:
            r, c = patch.row + dr, patch.col + dc
            blocks.append(window_divergences(kind, hx[r, c], hy[r, c], window))
    return PatchDescriptor(Stream.CHANNEL, np.concatenate(blocks), patch)


# --- dense extraction ---------------------------------------------------------


def dense_spatial(grids: RegionHistogramGrid, kind: DivergenceKind = HELLINGER,
                  window: int = 3) -> np.ndarray:
    """Spatial descriptors of every patch, shape ``(rows-2, cols-2, dim)``."""
    rows, cols, _ = grids.shape
    pr, pc = rows - 2, cols - 2
    blocks = []
    for ch in OPPONENT_CHANNELS:
        h = grids[ch]
        center = h[1:rows - 1, 1:cols - 1]
        for dr, dc in NEIGHBOR_OFFSETS:
            neighbor = h[1 + dr:1 + dr + pr, 1 + dc:1 + dc + pc]
            blocks.append(window_divergences(kind, center, neighbor, window))
    return np.concatenate(blocks, axis=-1)


def dense_channel(grids: RegionHistogramGrid, pairs=DEFAULT_PAIRS,
                  kind: DivergenceKind = HELLINGER, window: int = 3) -> np.ndarray:
    """Channel descriptors of every patch, shape ``(rows-2, cols-2, dim)``."""
    pairs = normalize_pairs(pairs)
    rows, cols, _ = grids.shape
    pr, pc = rows - 2, cols - 2
    blocks = []
    for x, y in pairs:
        # each region's pair contrast is shared by up to 9 patches
        region = window_divergences(kind, grids[x], grids[y], window)
        for dr, dc in PATCH_OFFSETS:
            blocks.append(region[dr:dr + pr, dc:dc + pc])
    return np.concatenate(blocks, axis=-1)


def image_grids(img: RasterImage, config) -> tuple[RegionHistogramGrid, RegionHistogramGrid]:
    """Resize ``img`` and histogram its opponent and RGB planes."""
    resized = resize_image(img, config.resize_width, config.resize_height)
    opp = histogram_grid(to_opponent(resized), config.grid_rows, config.grid_cols, config.bins)
    rgb = histogram_grid(split_rgb(resized), config.grid_rows, config.grid_cols, config.bins)
    return opp, rgb


def extract_image(img: RasterImage, config=None, image_id: str = "") -> tuple[DescriptorSet, DescriptorSet]:
    """Spatial and channel descriptor sets of one image.

    Parameters
    ----------
    img : RasterImage
    config : PipelineConfig, optional
        Defaults to :class:`lccd.config.PipelineConfig()`.
    image_id : str
    """
    if config is None:
        from lccd.config import PipelineConfig
        config = PipelineConfig()
    kind = config.divergence
    opp, rgb = image_grids(img, config)
    spatial = dense_spatial(opp, kind, config.subspace_window)
    channel = dense_channel(rgb, config.channel_pairs, kind, config.subspace_window)
    pr, pc = spatial.shape[:2]
    return (
        DescriptorSet(image_id, Stream.SPATIAL, spatial.reshape(pr * pc, -1), pr, pc),
        DescriptorSet(image_id, Stream.CHANNEL, channel.reshape(pr * pc, -1), pr, pc),
    )
