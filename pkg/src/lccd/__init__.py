"""Local color contrastive descriptors: extraction, encoding and evaluation."""

from lccd.errors import DataError, InvalidConfigError, InvalidInputError, LCCDError
from lccd.colorgrid import (
    ChannelPlane,
    RasterImage,
    RegionHistogramGrid,
    compute_region_histograms,
    histogram_grid,
    load_image,
    resize_image,
    split_rgb,
    to_opponent,
)
from lccd.divergence import DivergenceKind, divergence, subspace_divergence
from lccd.descriptor import (
    DescriptorSet,
    PatchIndex,
    channel_contrast_patch,
    extract_image,
    spatial_contrast_patch,
)
from lccd.reduction import PcaModel, fit_pca, project
from lccd.encoding import GmmModel, bow_histogram, concat_encodings, fisher_vector, fit_gmm
from lccd.classify import LinearModel, Report, confusion_pairs, evaluate, train
from lccd.config import PipelineConfig

__version__ = "0.1.0"
