# -*- coding: utf-8 -*-

"""
Training
========
Provides the training harness of the segmentation networks: assembly of the
augmented patch set, its seeded split into training and validation patches,
and the epoch loop with mini-batch Adam updates, validation and checkpointing.

"""


# %% IMPORTS
# Built-in imports
import csv
from dataclasses import dataclass, field
from os import path
from time import perf_counter

# Package imports
import numpy as np

# vesselfcn imports
from vesselfcn._internal import (
    DimMismatch, InvalidConfigValue, IoFailure, MalformedHeader,
    TooFewPatches, check_finite, get_logger, raise_error)
from vesselfcn.image_io import round_half_away
from vesselfcn.nn import functional as F
from vesselfcn.nn.io import save_weights
from vesselfcn.nn.optim import Adam
from vesselfcn.patches import (
    concat_patches, extract_random_patches, rotate_augment)

# All declaration
# train() itself is left out, as it would shadow this module in the package
__all__ = ['HistoryRow', 'TrainConfig', 'TrainHistory', 'build_training_set',
           'evaluate_patches', 'read_history_csv', 'split_train_val',
           'write_history_csv']

# Initialize logger
logger = get_logger(__name__)

# Per-model defaults of the number of epochs and the mini-batch size
MODEL_DEFAULTS = {'unet': {'epochs': 10, 'batch_size': 32},
                  'laddernet': {'epochs': 4, 'batch_size': 1024}}

# File names used inside a checkpoint directory
BEST_NAME = 'best.fcnw'
FINAL_NAME = 'final.fcnw'
HISTORY_NAME = 'history.csv'
HISTORY_HEADER = ['epoch', 'train_loss', 'val_loss', 'val_acc', 'seconds']


# %% CLASS DEFINITIONS
@dataclass
class TrainConfig(object):
    """
    Configuration of a training run. If `epochs` or `batch_size` are *None*,
    the defaults of `model` are used (10 epochs of 32 patches for U-Net, 4
    epochs of 1024 patches for LadderNet).

    """

    model: str = 'unet'
    epochs: int = None
    batch_size: int = None
    lr: float = 1e-3
    seed: int = 42
    patches_per_image: int = 2000
    patch_size: int = 48
    val_fraction: float = 0.1
    augment: bool = True

    def __post_init__(self):
        # Fill in per-model defaults
        if self.model not in MODEL_DEFAULTS:
            raise_error("Unknown model %r! Use 'unet' or 'laddernet'."
                        % (self.model), InvalidConfigValue, logger)
        for key, value in MODEL_DEFAULTS[self.model].items():
            if getattr(self, key) is None:
                setattr(self, key, value)

        # Check values
        if not(0 < self.val_fraction < 1):
            raise_error("Validation fraction must lie in (0, 1), not %r!"
                        % (self.val_fraction), InvalidConfigValue, logger)
        if(self.batch_size < 1 or self.epochs < 0 or
           self.patches_per_image < 1 or self.patch_size < 1):
            raise_error("Invalid training configuration %r!" % (self,),
                        InvalidConfigValue, logger)
        if not(self.lr > 0):
            raise_error("Learning rate must be positive, not %r!"
                        % (self.lr), InvalidConfigValue, logger)


@dataclass(frozen=True)
class HistoryRow(object):
    epoch: int
    train_loss: float
    val_loss: float
    val_acc: float
    seconds: float


@dataclass
class TrainHistory(object):
    """
    Per-epoch record of a training run: one :obj:`~HistoryRow` per completed
    epoch.

    """

    rows: list = field(default_factory=list)

    def __len__(self):
        return(len(self.rows))

    def __iter__(self):
        return(iter(self.rows))

    def column(self, name):
        return([getattr(row, name) for row in self.rows])

    @property
    def best_epoch(self):
        """
        int or None: The epoch with the lowest validation loss, the first one
        on ties.

        """

        if not self.rows:
            return(None)
        return(min(self.rows, key=lambda row: row.val_loss).epoch)


# %% FUNCTION DEFINITIONS
def build_training_set(images, labels, config):
    """
    Extracts ``config.patches_per_image`` random patches from every image and
    its label, and augments all of them with their three rotations if
    ``config.augment`` is *True*.

    Every image draws its patch origins from its own seed, derived from
    ``config.seed`` and its position in `images`.

    """

    if(len(images) != len(labels)):
        raise_error("Got %i images but %i labels!"
                    % (len(images), len(labels)), DimMismatch, logger)

    # Extract patches per image
    seeds = np.random.SeedSequence(config.seed).spawn(len(images))
    patch_sets = [
        extract_random_patches(img, label, config.patches_per_image,
                               config.patch_size, seed)
        for img, label, seed in zip(images, labels, seeds)]
    patches = concat_patches(patch_sets)

    # Augment with rotations
    if config.augment:
        patches = rotate_augment(patches)
    logger.info("Built training set of %i patches from %i images."
                % (len(patches), len(images)))
    return(patches)


def split_train_val(patches, val_fraction, seed):
    """
    Splits `patches` into a training and a validation set.

    The validation set holds ``round(val_fraction*n)`` patches drawn by a
    seeded random permutation; the training set holds all others.

    Raises
    ------
    TooFewPatches
        If there are fewer than two patches, or if either set would be empty.

    """

    n = len(patches)
    if(n < 2):
        raise_error("At least 2 patches are required for a training/"
                    "validation split, not %i!" % (n), TooFewPatches, logger)

    # Determine split sizes
    n_val = int(round_half_away(val_fraction*n))
    if not(1 <= n_val <= n-1):
        raise_error("Splitting %i patches with validation fraction %r leaves "
                    "an empty set!" % (n, val_fraction), TooFewPatches,
                    logger)

    # Split a seeded permutation
    order = np.random.default_rng(seed).permutation(n)
    return(patches[order[n_val:]], patches[order[:n_val]])


def evaluate_patches(model, patches, batch_size=256):
    """
    Returns the mean per-pixel loss and the pixel accuracy of `model` on the
    labeled `patches`, evaluated in evaluation mode.

    A pixel is predicted as vessel if its vessel probability is at least 0.5.

    """

    model.eval()
    total_loss = 0.0
    n_correct = 0
    for start in range(0, len(patches), batch_size):
        batch = patches[start:start+batch_size]
        logits = model.forward(batch.data[:, np.newaxis])
        loss, _ = F.softmax_xent(logits, batch.labels)
        total_loss += loss*batch.labels.size
        pred = F.softmax(logits)[:, 1] >= 0.5
        n_correct += int((pred == batch.labels.astype(bool)).sum())
    n_pix = patches.labels.size
    return(total_loss/n_pix, n_correct/n_pix)


def train(model, train_set, val_set, config, checkpoint_dir=None):
    """
    Trains `model` on `train_set` with Adam, validating on `val_set` after
    every epoch.

    Parameters
    ----------
    model : :obj:`~vesselfcn.nn.models.Model` object
        The model to train, in place.
    train_set, val_set : :obj:`~vesselfcn.patches.PatchSet` objects
        The labeled training and validation patches.
    config : :obj:`~TrainConfig` object
        The training configuration.

    Optional
    --------
    checkpoint_dir : str or None. Default: None
        If not *None*, the weights with the lowest validation loss, the final
        weights and the history CSV are written to this directory.

    Returns
    -------
    model : :obj:`~vesselfcn.nn.models.Model` object
        The trained `model`, in evaluation mode.
    history : :obj:`~TrainHistory` object
        One row per epoch.

    """

    history = TrainHistory()
    optimizer = Adam(model, lr=config.lr)
    rng = np.random.default_rng(config.seed)
    n = len(train_set)
    best_loss = np.inf

    # Run all epochs
    for epoch in range(1, config.epochs+1):
        start_time = perf_counter()
        model.train()

        # Run all mini-batches of a fresh permutation, keeping the last one
        order = rng.permutation(n)
        total_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch = train_set[order[start:start+config.batch_size]]
            model.zero_grad()
            loss = model.loss_and_grad(batch.data[:, np.newaxis],
                                       batch.labels)
            check_finite(loss, "the training loss of epoch %i" % (epoch),
                         logger)
            optimizer.step()
            total_loss += loss*len(batch)

        # Validate
        val_loss, val_acc = evaluate_patches(model, val_set)
        check_finite(val_loss, "the validation loss of epoch %i" % (epoch),
                     logger)
        row = HistoryRow(epoch, total_loss/n, val_loss, val_acc,
                         perf_counter()-start_time)
        history.rows.append(row)
        logger.info("Epoch %i/%i: train_loss=%.6f, val_loss=%.6f, "
                    "val_acc=%.6f (%.1fs)" % (epoch, config.epochs,
                                              row.train_loss, val_loss,
                                              val_acc, row.seconds))

        # Keep the best weights
        if(checkpoint_dir is not None and val_loss < best_loss):
            save_weights(model, path.join(checkpoint_dir, BEST_NAME))
        best_loss = min(best_loss, val_loss)

    # Write the final weights and the history
    if checkpoint_dir is not None:
        save_weights(model, path.join(checkpoint_dir, FINAL_NAME))
        write_history_csv(history, path.join(checkpoint_dir, HISTORY_NAME))

    # Return model and history
    return(model.eval(), history)


def write_history_csv(history, filename):
    """
    Writes `history` to the CSV file `filename`.

    """

    try:
        with open(filename, 'w', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(HISTORY_HEADER)
            for row in history:
                writer.writerow([row.epoch, repr(float(row.train_loss)),
                                 repr(float(row.val_loss)),
                                 repr(float(row.val_acc)),
                                 "%.3f" % (row.seconds)])
    except OSError as error:
        raise_error("Cannot write history file %r: %s" % (filename, error),
                    IoFailure, logger)


def read_history_csv(filename):
    """
    Reads the :obj:`~TrainHistory` stored in the CSV file `filename`.

    """

    history = TrainHistory()
    try:
        with open(filename, 'r', newline='') as f:
            reader = csv.reader(f)
            if(next(reader, None) != HISTORY_HEADER):
                raise_error("File %r is not a training history!"
                            % (filename), MalformedHeader, logger)
            for epoch, *values in reader:
                history.rows.append(HistoryRow(int(epoch),
                                               *map(float, values)))
    except OSError as error:
        raise_error("Cannot read history file %r: %s" % (filename, error),
                    IoFailure, logger)
    except (TypeError, ValueError):
        raise_error("History file %r contains a malformed row!"
                    % (filename), MalformedHeader, logger)
    return(history)
