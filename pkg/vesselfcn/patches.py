# -*- coding: utf-8 -*-

"""
Patches
=======
Provides the random extraction of training patches with their rotation
augmentation and shuffling, and the decomposition of full images into a
regular grid of (overlapping) patches whose predictions are averaged back
into a full probability map.

"""


# %% IMPORTS
# Built-in imports
from dataclasses import dataclass

# Package imports
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

# vesselfcn imports
from vesselfcn._internal import (
    DataError, DimMismatch, MissingPrediction, PatchLargerThanImage,
    StrideExceedsPatch, get_logger, raise_error)
from vesselfcn.image_io import GrayImage, ProbMap

# All declaration
__all__ = ['GridSpec', 'Patch', 'PatchSet', 'cover_counts', 'concat_patches',
           'extract_grid_patches', 'extract_random_patches', 'pad_for_grid',
           'rotate_augment', 'shuffle', 'stitch_average']

# Initialize logger
logger = get_logger(__name__)


# %% CLASS DEFINITIONS
@dataclass(frozen=True)
class Patch(object):
    """
    A single square patch: its intensities, its label (*None* for inference
    patches) and the (row, col) origin of its top-left pixel in the source
    image.

    """

    data: np.ndarray
    label: np.ndarray
    origin: tuple

    @property
    def size(self):
        return(self.data.shape[0])


@dataclass(frozen=True)
class PatchSet(object):
    """
    A set of equally sized square patches, stored as arrays.

    Attributes
    ----------
    data : :obj:`~numpy.ndarray` of shape (n, size, size)
        The intensities of all patches.
    labels : :obj:`~numpy.ndarray` of shape (n, size, size) or None
        The {0, 1} labels of all patches, or *None* for inference patches.
    origins : :obj:`~numpy.ndarray` of shape (n, 2)
        The (row, col) origin of every patch.

    """

    data: np.ndarray
    labels: np.ndarray
    origins: np.ndarray

    def __post_init__(self):
        if(self.data.ndim != 3 or self.data.shape[1] != self.data.shape[2]):
            raise_error("Patch data must have shape (n, size, size), not %s!"
                        % (self.data.shape,), DataError, logger)
        if(self.labels is not None and
           self.labels.shape != self.data.shape):
            raise_error("Patch labels must have the same shape as the patch "
                        "data!", DimMismatch, logger)
        if(self.origins.shape != (len(self.data), 2)):
            raise_error("Patch origins must have shape (n, 2)!", DataError,
                        logger)

    def __len__(self):
        return(len(self.data))

    def __getitem__(self, index):
        # Single patch
        if isinstance(index, (int, np.integer)):
            label = None if self.labels is None else self.labels[index]
            return(Patch(self.data[index], label,
                         tuple(int(v) for v in self.origins[index])))

        # Subset of patches
        labels = None if self.labels is None else self.labels[index]
        return(PatchSet(self.data[index], labels, self.origins[index]))

    @property
    def size(self):
        return(self.data.shape[1])


@dataclass(frozen=True)
class GridSpec(object):
    """
    Regular grid of patch origins covering a zero-padded image.

    Attributes
    ----------
    stride : int
        The distance between consecutive origins along both axes.
    patch_size : int
        The size of every patch.
    padded_height, padded_width : int
        The dimensions of the padded image.
    origins : :obj:`~numpy.ndarray` of shape (n, 2)
        All (row, col) origins, sorted row-major.

    """

    stride: int
    patch_size: int
    padded_height: int
    padded_width: int
    origins: np.ndarray


# %% FUNCTION DEFINITIONS
def extract_random_patches(img, label, n, size, seed):
    """
    Extracts `n` square patches of `size` from `img` and `label` at origins
    drawn uniformly and independently over all positions where the patch lies
    fully inside the image. The field of view is ignored.

    Parameters
    ----------
    img : :obj:`~GrayImage` object
        The preprocessed image.
    label : :obj:`~BinaryMask` object
        The vessel label of `img`.
    n : int
        The number of patches to extract. Duplicates are allowed.
    size : int
        The size of every patch.
    seed : int
        The seed of the random number generator.

    Returns
    -------
    patches : :obj:`~PatchSet` object
        The extracted patches, in the order they were drawn.

    """

    # Check dimensions
    if(label.data.shape != img.data.shape):
        raise_error("Label dimensions %s differ from image dimensions %s!"
                    % (label.data.shape, img.data.shape), DimMismatch, logger)
    if(size > min(img.data.shape)):
        raise_error("Patch size %i exceeds image dimensions %s!"
                    % (size, img.data.shape), PatchLargerThanImage, logger)

    # Draw origins
    rng = np.random.default_rng(seed)
    rows = rng.integers(0, img.height-size+1, size=n)
    cols = rng.integers(0, img.width-size+1, size=n)

    # Cut out patches
    data_windows = sliding_window_view(img.data, (size, size))
    label_windows = sliding_window_view(label.data, (size, size))
    data = data_windows[rows, cols].copy()
    labels = label_windows[rows, cols].copy()

    # Return patches
    return(PatchSet(data, labels, np.stack([rows, cols], axis=1)))


def concat_patches(patch_sets):
    """
    Concatenates all given :obj:`~PatchSet` objects into a single one.

    """

    labels = [p.labels for p in patch_sets]
    labels = None if any(l is None for l in labels) else np.concatenate(labels)
    return(PatchSet(np.concatenate([p.data for p in patch_sets]), labels,
                    np.concatenate([p.origins for p in patch_sets])))


def rotate_augment(patches):
    """
    Augments `patches` with their 90, 180 and 270 degree counter-clockwise
    rotations, rotating data and labels together.

    The output holds all input patches first, followed by all of their
    90 degree rotations, etc. Origins are copied from the source patches.

    """

    rotated = []
    for k in range(4):
        data = np.rot90(patches.data, k, axes=(1, 2))
        labels = (None if patches.labels is None else
                  np.rot90(patches.labels, k, axes=(1, 2)))
        rotated.append(PatchSet(data, labels, patches.origins))
    return(concat_patches(rotated))


def shuffle(patches, seed):
    """
    Returns a seeded random permutation of `patches`.

    """

    order = np.random.default_rng(seed).permutation(len(patches))
    return(patches[order])


def pad_for_grid(img, size, stride):
    """
    Zero-pads `img` at the bottom and right such that a grid of patches of
    `size` with the given `stride` exactly covers it.

    Parameters
    ----------
    img : :obj:`~GrayImage` object
        The image to pad.
    size : int
        The patch size.
    stride : int
        The distance between consecutive patch origins. Using ``stride=size``
        gives seamless, non-overlapping patches.

    Returns
    -------
    padded : :obj:`~GrayImage` object
        The padded image.
    grid : :obj:`~GridSpec` object
        The grid of patch origins covering `padded`.

    """

    # Check stride
    if not(1 <= stride <= size):
        raise_error("Stride %i must lie in [1, patch size %i]!"
                    % (stride, size), StrideExceedsPatch, logger)

    # Determine padded dimensions
    def padded_dim(dim):
        if(dim <= size):
            return(size)
        return(size+stride*(-(-(dim-size)//stride)))

    pad_h = padded_dim(img.height)
    pad_w = padded_dim(img.width)

    # Pad image
    padded = np.zeros((pad_h, pad_w))
    padded[:img.height, :img.width] = img.data

    # Determine all origins in row-major order
    rows = np.arange(0, pad_h-size+1, stride)
    cols = np.arange(0, pad_w-size+1, stride)
    origins = np.stack(np.meshgrid(rows, cols, indexing='ij'),
                       axis=-1).reshape(-1, 2)

    # Return padded image and grid
    grid = GridSpec(stride, size, pad_h, pad_w, origins)
    return(GrayImage(padded), grid)


def extract_grid_patches(padded, grid):
    """
    Cuts the patches of `grid` out of the padded image `padded`.

    """

    size = grid.patch_size
    windows = sliding_window_view(padded.data, (size, size))
    data = windows[grid.origins[:, 0], grid.origins[:, 1]].copy()
    return(PatchSet(data, None, grid.origins.copy()))


def cover_counts(grid):
    """
    Returns the number of grid patches covering every pixel of the padded
    image described by `grid`.

    """

    counts = np.zeros((grid.padded_height, grid.padded_width), dtype=np.int64)
    size = grid.patch_size
    for row, col in grid.origins:
        counts[row:row+size, col:col+size] += 1
    return(counts)


def stitch_average(preds, grid, original_dims):
    """
    Averages overlapping patch predictions into a full probability map.

    Parameters
    ----------
    preds : list of (origin, :obj:`~numpy.ndarray`) tuples
        The predicted probabilities of every grid patch with its origin.
    grid : :obj:`~GridSpec` object
        The grid that the predictions were made on.
    original_dims : tuple of int
        The (height, width) of the image before padding.

    Returns
    -------
    prob_map : :obj:`~ProbMap` object
        The averaged probabilities, cropped to `original_dims`.

    Note
    ----
    Predictions are summed in 64-bit floats with integer cover counts, such
    that the result does not depend on the order of `preds`. Averaging
    identical 32-bit predictions reproduces them exactly.

    """

    # Map every origin to its prediction
    size = grid.patch_size
    by_origin = {}
    for origin, pred in preds:
        pred = np.asarray(pred)
        if(pred.shape != (size, size)):
            raise_error("Prediction at %s has shape %s instead of %s!"
                        % (tuple(origin), pred.shape, (size, size)),
                        DimMismatch, logger)
        by_origin[tuple(int(v) for v in origin)] = pred

    # Accumulate predictions in grid order
    total = np.zeros((grid.padded_height, grid.padded_width))
    for row, col in grid.origins:
        pred = by_origin.get((int(row), int(col)))
        if pred is None:
            raise_error("No prediction was given for grid origin %s!"
                        % ((int(row), int(col)),), MissingPrediction, logger)
        total[row:row+size, col:col+size] += pred

    # Average and crop
    height, width = original_dims
    avg = total/cover_counts(grid)
    return(ProbMap(avg[:height, :width]))
