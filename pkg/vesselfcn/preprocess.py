# -*- coding: utf-8 -*-

"""
Preprocessing
=============
Provides the four-step preprocessing chain applied to every retinal image
before patches are cut from it: grayscale conversion, dataset-wide z-score
standardization followed by a min-max rescale, contrast-limited adaptive
histogram equalization (CLAHE) and gamma adjustment.

Between the steps, intensities live in [0, 1] as 64-bit floats. Quantization
to 8 bits only happens inside :func:`~clahe`.

"""


# %% IMPORTS
# Built-in imports
from dataclasses import dataclass

# Package imports
import numpy as np
from scipy import ndimage
from skimage.filters import threshold_otsu

# vesselfcn imports
from vesselfcn._internal import (
    DegenerateDataset, DegenerateRange, InvalidConfigValue, InvalidGamma,
    IoFailure, MalformedHeader, get_logger, raise_error)
from vesselfcn.image_io import BinaryMask, GrayImage, round_half_away

# All declaration
__all__ = ['ClaheParams', 'DatasetStats', 'clahe', 'compute_stats',
           'estimate_fov', 'gamma_adjust', 'preprocess_pipeline',
           'read_stats', 'rgb_to_gray', 'standardize', 'write_stats',
           'zscore_range']

# Initialize logger
logger = get_logger(__name__)

# Number of gray levels used by CLAHE
N_LEVELS = 256


# %% CLASS DEFINITIONS
@dataclass(frozen=True)
class DatasetStats(object):
    """
    Pooled pixel statistics of a set of grayscale images, together with the
    extrema of their z-scores that are used for the min-max rescale.

    """

    mean: float
    std: float
    zmin: float = None
    zmax: float = None

    def __post_init__(self):
        if not(self.std > 0):
            raise_error("Dataset standard deviation must be positive!",
                        DegenerateDataset, logger)


@dataclass(frozen=True)
class ClaheParams(object):
    """
    Parameters of :func:`~clahe`. A `clip_limit` of 0 disables clipping;
    otherwise every histogram bin is clipped at `clip_limit` times the mean
    bin height of its tile.

    """

    tiles_x: int = 8
    tiles_y: int = 8
    clip_limit: float = 2.0
    bins: int = N_LEVELS

    def __post_init__(self):
        if(self.tiles_x < 1 or self.tiles_y < 1):
            raise_error("CLAHE requires at least one tile per axis!",
                        InvalidConfigValue, logger)
        if(self.bins != N_LEVELS):
            raise_error("CLAHE only supports %i bins!" % (N_LEVELS),
                        InvalidConfigValue, logger)
        if(self.clip_limit < 0):
            raise_error("CLAHE clip limit cannot be negative!",
                        InvalidConfigValue, logger)


# %% FUNCTION DEFINITIONS
def rgb_to_gray(img):
    """
    Converts the :obj:`~RgbImage` `img` to a :obj:`~GrayImage` using
    ``0.299*R + 0.587*G + 0.114*B``, without rounding.

    """

    rgb = img.data.astype(np.float64)
    gray = 0.299*rgb[..., 0]+0.587*rgb[..., 1]+0.114*rgb[..., 2]
    return(GrayImage(gray))


def compute_stats(images):
    """
    Computes the mean and population standard deviation of the pooled pixels
    of all `images`.

    Parameters
    ----------
    images : list of :obj:`~GrayImage` objects
        The images to pool. Their pixels are combined in the given order.

    Returns
    -------
    stats : :obj:`~DatasetStats` object
        The pooled statistics, without z-score extrema.

    """

    # Check that images were provided
    if not len(images):
        raise_error("Cannot compute statistics of zero images!",
                    DegenerateDataset, logger)

    # Compute pooled mean
    n_pix = sum(img.data.size for img in images)
    mean = sum(img.data.sum() for img in images)/n_pix

    # Compute pooled population variance around it
    var = sum(np.square(img.data-mean).sum() for img in images)/n_pix
    std = float(np.sqrt(var))

    # Check that the dataset is not degenerate
    if not(std > 0):
        raise_error("All pixels of the dataset are equal; standardization is "
                    "undefined!", DegenerateDataset, logger)

    # Return stats
    return(DatasetStats(float(mean), std))


def zscore_range(images, stats):
    """
    Returns the minimum and maximum z-score over all `images` under `stats`.

    """

    zs = [(img.data-stats.mean)/stats.std for img in images]
    return(float(min(z.min() for z in zs)), float(max(z.max() for z in zs)))


def standardize(img, stats, global_min, global_max):
    """
    Applies the z-score standardization of `stats` to `img`, followed by a
    min-max rescale that maps z-score `global_min` to 0 and `global_max` to 1.

    Parameters
    ----------
    img : :obj:`~GrayImage` object
        The image to standardize.
    stats : :obj:`~DatasetStats` object
        The dataset statistics to standardize with.
    global_min, global_max : float
        The extreme z-scores of the dataset.

    Returns
    -------
    std_img : :obj:`~GrayImage` object
        The standardized image. Pixels of images that were not part of the
        dataset the extrema were taken from are clipped to [0, 1].

    """

    # Check the range
    if not(global_max > global_min):
        raise_error("Z-score range [%r, %r] is degenerate!"
                    % (global_min, global_max), DegenerateRange, logger)

    # Standardize and rescale
    z = (img.data-stats.mean)/stats.std
    out = (z-global_min)/(global_max-global_min)

    # Return clipped image
    return(GrayImage(np.clip(out, 0, 1)))


def clahe(img, params=ClaheParams()):
    """
    Applies contrast-limited adaptive histogram equalization to `img`.

    The image is quantized to the levels 0..255 and divided into
    ``tiles_y*tiles_x`` tiles, with the last tile of every axis absorbing the
    remainder. For every tile, the histogram is clipped at
    ``clip_limit*tile_pixels/256`` (if `clip_limit` is positive) and the
    clipped excess is spread uniformly over all bins in a single pass. The
    mapping of a tile is ``round(255*(cdf(v)-cdf_min)/(n-cdf_min))``, or the
    identity for a constant tile. Every pixel takes the bilinear interpolation
    of the mappings of its four nearest tile centers.

    Parameters
    ----------
    img : :obj:`~GrayImage` object
        Image with intensities in [0, 1].

    Optional
    --------
    params : :obj:`~ClaheParams` object. Default: ClaheParams()
        The CLAHE parameters.

    Returns
    -------
    eq_img : :obj:`~GrayImage` object
        The equalized image, with intensities in [0, 1].

    """

    # Quantize image
    levels = np.clip(round_half_away(img.data*255), 0, 255).astype(np.intp)
    height, width = levels.shape

    # Determine tile boundaries on both axes
    y_edges = _tile_edges(height, params.tiles_y)
    x_edges = _tile_edges(width, params.tiles_x)

    # Compute the mapping of every tile
    maps = np.empty((len(y_edges)-1, len(x_edges)-1, N_LEVELS))
    for i, (y0, y1) in enumerate(zip(y_edges[:-1], y_edges[1:])):
        for j, (x0, x1) in enumerate(zip(x_edges[:-1], x_edges[1:])):
            maps[i, j] = tile_mapping(levels[y0:y1, x0:x1],
                                      params.clip_limit)

    # Determine interpolation indices and weights on both axes
    y0_idx, y1_idx, wy = _interp_weights(height, y_edges)
    x0_idx, x1_idx, wx = _interp_weights(width, x_edges)
    wy = wy[:, np.newaxis]
    wx = wx[np.newaxis, :]

    # Interpolate the mappings of the four nearest tile centers
    y0_idx = y0_idx[:, np.newaxis]
    y1_idx = y1_idx[:, np.newaxis]
    x0_idx = x0_idx[np.newaxis, :]
    x1_idx = x1_idx[np.newaxis, :]
    out = ((1-wy)*((1-wx)*maps[y0_idx, x0_idx, levels] +
                   wx*maps[y0_idx, x1_idx, levels]) +
           wy*((1-wx)*maps[y1_idx, x0_idx, levels] +
               wx*maps[y1_idx, x1_idx, levels]))

    # Return equalized image
    return(GrayImage(out/255))


def tile_mapping(tile, clip_limit):
    """
    Returns the non-decreasing 256-entry gray level mapping of the quantized
    `tile`, after clipping its histogram at `clip_limit` times its mean bin
    height.

    """

    # Build histogram
    n_pix = tile.size
    hist = np.bincount(tile.ravel(), minlength=N_LEVELS).astype(np.float64)
    lowest = np.flatnonzero(hist)[0]

    # A constant tile maps every level onto itself
    if(hist[lowest] == n_pix):
        return(np.arange(N_LEVELS, dtype=np.float64))

    # Clip histogram and redistribute the excess once
    if(clip_limit > 0):
        limit = clip_limit*n_pix/N_LEVELS
        excess = np.maximum(hist-limit, 0).sum()
        hist = np.minimum(hist, limit)+excess/N_LEVELS

    # Compute cumulative distribution and its value at the lowest level
    cdf = np.cumsum(hist)
    cdf_min = cdf[lowest]
    total = cdf[-1]

    # Return mapping
    mapping = round_half_away(255*(cdf-cdf_min)/(total-cdf_min))
    return(np.clip(mapping, 0, 255))


def gamma_adjust(img, gamma):
    """
    Applies gamma adjustment to the [0, 1] image `img`, raising every
    intensity to the power ``1/gamma``.

    """

    if not(gamma > 0):
        raise_error("Gamma must be positive, not %r!" % (gamma),
                    InvalidGamma, logger)
    return(GrayImage(np.power(img.data, 1/gamma)))


def preprocess_pipeline(images, clahe_params=ClaheParams(), gamma=1.2,
                        stats=None):
    """
    Applies grayscale conversion, standardization, CLAHE and gamma adjustment
    to all `images`, in that order.

    Parameters
    ----------
    images : list of :obj:`~RgbImage` objects
        The color images to preprocess.

    Optional
    --------
    clahe_params : :obj:`~ClaheParams` object. Default: ClaheParams()
        The parameters to use for CLAHE.
    gamma : float. Default: 1.2
        The gamma to use for gamma adjustment.
    stats : :obj:`~DatasetStats` object or None. Default: None
        If *None*, the statistics and z-score extrema are computed over
        `images`. Else, these training-time statistics are used instead.

    Returns
    -------
    processed : list of :obj:`~GrayImage` objects
        The preprocessed images, with intensities in [0, 1].
    stats : :obj:`~DatasetStats` object
        The statistics that were used, including z-score extrema.

    """

    # Convert to grayscale
    grays = [rgb_to_gray(img) for img in images]

    # Obtain dataset statistics if not given
    if stats is None:
        stats = compute_stats(grays)
        zmin, zmax = zscore_range(grays, stats)
        stats = DatasetStats(stats.mean, stats.std, zmin, zmax)
        logger.info("Computed dataset stats: mean=%r, std=%r, zmin=%r, "
                    "zmax=%r" % (stats.mean, stats.std, zmin, zmax))

    # Apply the remaining steps
    processed = []
    for gray in grays:
        img = standardize(gray, stats, stats.zmin, stats.zmax)
        img = clahe(img, clahe_params)
        processed.append(gamma_adjust(img, gamma))

    # Return processed images and stats
    return(processed, stats)


def write_stats(stats, path):
    """
    Writes the :obj:`~DatasetStats` `stats` to the text file at `path`.

    """

    try:
        with open(path, 'w') as f:
            for name in ('mean', 'std', 'zmin', 'zmax'):
                f.write("%s=%r\n" % (name, float(getattr(stats, name))))
    except OSError as error:
        raise_error("Cannot write stats file %r: %s" % (path, error),
                    IoFailure, logger)


def read_stats(path):
    """
    Reads the :obj:`~DatasetStats` stored in the text file at `path`.

    """

    # Read all key-value lines
    values = {}
    try:
        with open(path, 'r') as f:
            for line in f:
                if line.strip():
                    key, _, value = line.partition('=')
                    values[key.strip()] = float(value)
    except OSError as error:
        raise_error("Cannot read stats file %r: %s" % (path, error),
                    IoFailure, logger)
    except ValueError:
        raise_error("Stats file %r contains a non-numeric value!" % (path),
                    MalformedHeader, logger)

    # Check that all keys are present
    missing = {'mean', 'std', 'zmin', 'zmax'}.difference(values)
    if missing:
        raise_error("Stats file %r lacks the keys %s!"
                    % (path, sorted(missing)), MalformedHeader, logger)

    # Return stats
    return(DatasetStats(values['mean'], values['std'], values['zmin'],
                        values['zmax']))


def estimate_fov(img, closing=5):
    """
    Estimates the field-of-view mask of the fundus photograph `img`, for
    datasets that do not ship one.

    The grayscale image is thresholded with Otsu's method, after which the
    largest connected component is kept, its holes are filled and its border
    is smoothed by a morphological closing and opening.

    Parameters
    ----------
    img : :obj:`~RgbImage` object
        The fundus photograph.

    Optional
    --------
    closing : int. Default: 5
        Size of the square structuring element used for smoothing.

    Returns
    -------
    fov : :obj:`~BinaryMask` object
        The estimated FOV mask.

    """

    # Threshold the grayscale image
    gray = rgb_to_gray(img).data
    if(gray.max() == gray.min()):
        return(BinaryMask(np.zeros(gray.shape, dtype=np.uint8)))
    mask = gray > threshold_otsu(gray)

    # Keep the largest connected component
    labels, n_labels = ndimage.label(mask)
    if(n_labels > 1):
        sizes = np.bincount(labels.ravel())
        sizes[0] = 0
        mask = labels == np.argmax(sizes)

    # Fill holes and smooth the border
    mask = ndimage.binary_fill_holes(mask)
    structure = np.ones((closing, closing), dtype=bool)
    mask = ndimage.binary_closing(mask, structure)
    mask = ndimage.binary_opening(mask, structure)

    # Return FOV mask
    return(BinaryMask(mask.astype(np.uint8)))


# %% HELPER FUNCTIONS
# Determines tile edges along an axis with the last tile absorbing the rest
def _tile_edges(length, n_tiles):
    n_tiles = min(n_tiles, length)
    tile = length//n_tiles
    edges = [i*tile for i in range(n_tiles)]
    edges.append(length)
    return(edges)


# Determines bilinear interpolation indices and weights along an axis
def _interp_weights(length, edges):
    edges = np.asarray(edges, dtype=np.float64)
    centers = (edges[:-1]+edges[1:]-1)/2
    pos = np.arange(length, dtype=np.float64)

    # Find the tile center at or before every position, clamped at borders
    idx0 = np.clip(np.searchsorted(centers, pos, side='right')-1, 0,
                   len(centers)-1)
    idx1 = np.minimum(idx0+1, len(centers)-1)

    # Determine the weight of the second center
    span = centers[idx1]-centers[idx0]
    weight = np.zeros(length)
    inner = span > 0
    weight[inner] = (pos[inner]-centers[idx0][inner])/span[inner]

    # Return indices and weights
    return(idx0, idx1, np.clip(weight, 0, 1))
