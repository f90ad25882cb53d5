"""Synthetic color-texture datasets and a luminance-gradient descriptor stream.

The generator draws each class from its own pair of hues painted as
stripes of a class-typical orientation, so classes are separable by color
contrast and, more weakly, by edge orientation.  The gradient stream is a
small SIFT-like orientation histogram used as the shape-based partner when
testing descriptor fusion.
"""

from __future__ import annotations

import colorsys
import csv
from pathlib import Path

import numpy as np

from lccd.colorgrid import RasterImage, region_bounds, resize_image
from lccd.descriptor import PATCH_OFFSETS, DescriptorSet, Stream


def _rgb(hue, sat, val):
    return np.array(colorsys.hsv_to_rgb(hue % 1.0, sat, val)) * 255.0


def class_hues(label: int, n_classes: int) -> tuple[float, float]:
    """Hue pair (in turns) of a class; all ``2 * n_classes`` hues are distinct."""
    hue_a = label / (2 * n_classes)
    return hue_a, hue_a + 0.5


def texture_image(label: int, rng: np.random.Generator, n_classes: int = 5,
                  width: int = 120, height: int = 100,
                  orientation_jitter: float = 0.1) -> RasterImage:
    """One image of class ``label``: two-hue stripes plus pixel noise."""
    hue_a, hue_b = class_hues(label, n_classes)
    jitter = rng.normal(0.0, 0.02, size=2)
    col_a = _rgb(hue_a + jitter[0], rng.uniform(0.6, 1.0), rng.uniform(0.6, 1.0))
    col_b = _rgb(hue_b + jitter[1], rng.uniform(0.6, 1.0), rng.uniform(0.6, 1.0))

    angle = np.pi * label / n_classes + rng.normal(0.0, orientation_jitter)
    period = rng.uniform(14.0, 30.0)
    phase = rng.uniform(0.0, period)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    coord = xx * np.cos(angle) + yy * np.sin(angle) + phase
    mask = (np.mod(coord, period) < period / 2)[..., None]

    img = np.where(mask, col_a, col_b) + rng.normal(0.0, 8.0, size=(height, width, 3))
    return RasterImage(np.clip(np.rint(img), 0, 255).astype(np.uint8))


def make_dataset(out_dir, n_classes: int = 5, per_class: int = 40, n_train: int = 30,
                 width: int = 120, height: int = 100, seed: int = 0,
                 orientation_jitter: float = 0.1) -> Path:
    """Write PNG images and a ``manifest.csv``; returns the manifest path."""
    from PIL import Image

    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    rows = []
    for label in range(n_classes):
        for i in range(per_class):
            img = texture_image(label, rng, n_classes, width, height, orientation_jitter)
            rel = f"images/c{label}_{i:03d}.png"
            Image.fromarray(img.data).save(out_dir / rel)
            rows.append((rel, f"class{label}", "train" if i < n_train else "test"))
    manifest = out_dir / "manifest.csv"
    with open(manifest, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["image_path", "label", "split"])
        w.writerows(rows)
    return manifest


def gradient_descriptors(img: RasterImage, config, image_id: str = "",
                         orientations: int = 8) -> DescriptorSet:
    """Dense orientation-histogram descriptors on the LCCD patch grid.

    Each region gets a magnitude-weighted histogram of luminance gradient
    orientations; a patch concatenates its 9 regions and is L2-normalized.
    """
    resized = resize_image(img, config.resize_width, config.resize_height)
    lum = resized.data.astype(np.float64).mean(axis=-1)
    gy, gx = np.gradient(lum)
    mag = np.hypot(gx, gy)
    ori = np.mod(np.arctan2(gy, gx), 2 * np.pi)
    bins = np.minimum((ori / (2 * np.pi) * orientations).astype(np.intp), orientations - 1)

    rows, cols = config.grid_rows, config.grid_cols
    h, w = lum.shape
    row_region = np.searchsorted(region_bounds(h, rows), np.arange(h), side="right") - 1
    col_region = np.searchsorted(region_bounds(w, cols), np.arange(w), side="right") - 1
    region = row_region[:, None] * cols + col_region[None, :]
    hist = np.bincount((region * orientations + bins).ravel(), weights=mag.ravel(),
                       minlength=rows * cols * orientations).reshape(rows, cols, orientations)

    pr, pc = rows - 2, cols - 2
    patches = np.concatenate([hist[dr:dr + pr, dc:dc + pc] for dr, dc in PATCH_OFFSETS], axis=-1)
    patches = patches.reshape(pr * pc, -1)
    norms = np.linalg.norm(patches, axis=1, keepdims=True)
    patches = np.divide(patches, norms, out=np.zeros_like(patches), where=norms > 0)
    return DescriptorSet(image_id, Stream.EXTERNAL, patches, pr, pc)


def write_gradient_stream(config, manifest, path) -> Path:
    """Compute :func:`gradient_descriptors` for every manifest image into an LCCDDSC1 file."""
    from lccd.colorgrid import load_image
    from lccd.formats import write_descriptors
    from lccd.pipeline import image_order, read_manifest

    base = Path(manifest).parent
    sets = [gradient_descriptors(load_image(base / i), config, image_id=i)
            for i in image_order(read_manifest(manifest))]
    dim = 9 * 8
    write_descriptors(path, sets, Stream.EXTERNAL, dim, config.grid_rows - 2, config.grid_cols - 2)
    return Path(path)
