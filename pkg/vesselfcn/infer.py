# -*- coding: utf-8 -*-

"""
Inference
=========
Provides the prediction of full-image vessel probability maps: the
preprocessed image is zero-padded, cut into a grid of (overlapping) patches,
predicted in batches and averaged back into a map of the original size,
which can then be thresholded into a binary segmentation.

If the package runs under MPI, the patch batches of an image are distributed
over all ranks and their predictions are merged in grid order.

"""


# %% IMPORTS
# Built-in imports
from dataclasses import dataclass
from time import perf_counter

# Package imports
import numpy as np

# vesselfcn imports
from vesselfcn import _mpi
from vesselfcn._internal import (
    InvalidConfigValue, StrideExceedsPatch, check_finite, get_logger,
    raise_error)
from vesselfcn.image_io import BinaryMask
from vesselfcn.patches import (
    extract_grid_patches, pad_for_grid, stitch_average)

# All declaration
__all__ = ['InferConfig', 'binarize', 'predict_image', 'predict_timed']

# Initialize logger
logger = get_logger(__name__)


# %% CLASS DEFINITIONS
@dataclass(frozen=True)
class InferConfig(object):
    """
    Configuration of full-image prediction.

    Attributes
    ----------
    mode : {'stride', 'nonoverlap'}
        Whether patches are taken every `stride` pixels or every
        `patch_size` pixels.
    stride : int
        The distance between patch origins in 'stride' mode.
    batch_size : int
        The number of patches per forward pass.
    threshold : float
        The vessel probability at or above which a pixel becomes vessel.
    patch_size : int
        The size of the patches the model is applied to.

    """

    mode: str = 'stride'
    stride: int = 5
    batch_size: int = 256
    threshold: float = 0.5
    patch_size: int = 48

    def __post_init__(self):
        if self.mode not in ('stride', 'nonoverlap'):
            raise_error("Unknown inference mode %r! Use 'stride' or "
                        "'nonoverlap'." % (self.mode), InvalidConfigValue,
                        logger)
        if not(1 <= self.stride <= self.patch_size):
            raise_error("Stride %r must lie in [1, patch size %r]!"
                        % (self.stride, self.patch_size), StrideExceedsPatch,
                        logger)
        if not(0 < self.threshold < 1):
            raise_error("Threshold must lie in (0, 1), not %r!"
                        % (self.threshold), InvalidConfigValue, logger)
        if(self.batch_size < 1):
            raise_error("Batch size must be positive, not %r!"
                        % (self.batch_size), InvalidConfigValue, logger)

    @property
    def effective_stride(self):
        return(self.patch_size if(self.mode == 'nonoverlap') else
               self.stride)


# %% FUNCTION DEFINITIONS
def predict_image(model, img, cfg=InferConfig(), comm=None):
    """
    Predicts the vessel probability of every pixel of the preprocessed image
    `img`.

    Parameters
    ----------
    model : :obj:`~vesselfcn.nn.models.Model` object
        The trained model. It is switched to evaluation mode.
    img : :obj:`~vesselfcn.image_io.GrayImage` object
        The preprocessed image, with intensities in [0, 1].

    Optional
    --------
    cfg : :obj:`~InferConfig` object. Default: InferConfig()
        The inference configuration.
    comm : :obj:`~MPI.Intracomm` object or None. Default: None
        The communicator to distribute the patch batches over.
        If *None*, use :obj:`~vesselfcn._mpi.COMM_WORLD` instead.

    Returns
    -------
    prob_map : :obj:`~vesselfcn.image_io.ProbMap` object
        The overlap-averaged vessel probabilities, of the same dimensions as
        `img`.

    """

    model.eval()

    # Cut the padded image into grid patches
    padded, grid = pad_for_grid(img, cfg.patch_size, cfg.effective_stride)
    patches = extract_grid_patches(padded, grid)
    n_batches = -(-len(patches)//cfg.batch_size)
    logger.debug("Predicting %i patches in %i batches."
                 % (len(patches), n_batches))

    # Predict the batches of this rank
    local = []
    for index in _mpi.split_work(n_batches, comm):
        batch = patches[index*cfg.batch_size:(index+1)*cfg.batch_size]
        probs = model.predict_proba(batch.data[:, np.newaxis],
                                    cfg.batch_size)
        check_finite(probs, "the predictions of batch %i" % (index), logger)
        local.extend(zip(map(tuple, batch.origins), probs))

    # Merge all predictions in grid order and average them
    preds = _mpi.gather_ordered(local, comm)
    return(stitch_average(preds, grid, (img.height, img.width)))


def predict_timed(model, img, cfg=InferConfig(), comm=None):
    """
    Runs :func:`~predict_image` and returns the probability map together with
    the elapsed wall-clock time in seconds.

    """

    start = perf_counter()
    prob_map = predict_image(model, img, cfg, comm)
    return(prob_map, perf_counter()-start)


def binarize(p, threshold=0.5):
    """
    Thresholds the :obj:`~vesselfcn.image_io.ProbMap` `p` into a
    :obj:`~vesselfcn.image_io.BinaryMask`, marking every pixel with a
    probability of at least `threshold` as vessel.

    """

    return(BinaryMask((p.data >= threshold).astype(np.uint8)))
