"""Extract both descriptor streams from one synthetic image.

Run with ``python3 demos/descriptors.py``.  Shows the patch layout, the
block structure of a spatial descriptor, and that a grayscale copy of the
image has no channel contrast.
"""

import numpy as np

from lccd.colorgrid import RasterImage
from lccd.config import PipelineConfig
from lccd.descriptor import NEIGHBOR_OFFSETS, extract_image
from lccd.synthetic import texture_image

config = PipelineConfig(resize_width=120, resize_height=100, grid_rows=20, grid_cols=20)
img = texture_image(label=2, rng=np.random.default_rng(3))
spatial, channel = extract_image(img, config, image_id="demo")
print("spatial", spatial.values.shape, "channel", channel.values.shape,
      f"({spatial.patch_rows}x{spatial.patch_cols} patches)")

# spatial layout: 3 opponent channels x 8 neighbors x 18 windows
blocks = spatial.values.reshape(-1, 3, len(NEIGHBOR_OFFSETS), 18).sum(axis=-1)
print("mean contrast per opponent channel:", np.round(blocks.mean(axis=(0, 2)), 4))
print("mean contrast per neighbor:        ", np.round(blocks.mean(axis=(0, 1)), 4))

gray = img.data.astype(np.float64).mean(axis=-1, keepdims=True).round().astype(np.uint8)
_, gray_channel = extract_image(RasterImage(gray.repeat(3, axis=-1)), config)
print("channel stream of the grayscale copy is all zero:", bool(np.all(gray_channel.values == 0)))
