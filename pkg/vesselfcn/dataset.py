# -*- coding: utf-8 -*-

"""
Dataset
=======
Provides the reading and writing of retinal datasets in the directory layout
used by *vesselfcn*::

    root/images/<id>.ppm    color fundus photographs
    root/labels/<id>.pgm    manual vessel annotations ({0, 255})
    root/fov/<id>.pgm       field-of-view masks ({0, 255}), optional
    root/strata.txt         lines '<id><TAB><stratum>', optional
    root/test.txt           one <id> per line of a predefined test split,
                            optional

Files are matched by their shared basename. Images without a FOV mask get
one estimated from the photograph.

"""


# %% IMPORTS
# Built-in imports
from collections import OrderedDict
from dataclasses import dataclass, field
import os
from os import path

# vesselfcn imports
from vesselfcn._internal import (
    DimMismatch, EmptyDataset, IoFailure, LayoutError, get_logger,
    raise_error, raise_warning)
from vesselfcn.image_io import (
    BinaryMask, read_pgm, read_ppm, write_mask, write_ppm)
from vesselfcn.preprocess import estimate_fov

# All declaration
__all__ = ['Dataset', 'load_dataset', 'read_id_list', 'read_strata',
           'write_dataset', 'write_id_list', 'write_strata']

# Initialize logger
logger = get_logger(__name__)

# Names used in the dataset layout
IMAGES_DIR = 'images'
LABELS_DIR = 'labels'
FOV_DIR = 'fov'
STRATA_NAME = 'strata.txt'
TEST_NAME = 'test.txt'


# %% CLASS DEFINITIONS
@dataclass
class Dataset(object):
    """
    Retinal images with their vessel labels and FOV masks, in matching order
    of their `ids`.

    Attributes
    ----------
    ids : list of str
        The basenames of all images, sorted.
    images : list of :obj:`~vesselfcn.image_io.RgbImage` objects
        The fundus photographs.
    labels, fovs : lists of :obj:`~vesselfcn.image_io.BinaryMask` objects
        The vessel annotations and field-of-view masks.
    strata : dict of str
        The stratum of every image that has one.
    test_ids : list of str or None
        The ids of a predefined test split, if the dataset has one.

    """

    ids: list
    images: list
    labels: list
    fovs: list
    strata: dict = field(default_factory=dict)
    test_ids: list = None

    def __len__(self):
        return(len(self.ids))

    def subset(self, ids):
        """
        Returns the :obj:`~Dataset` holding only the images with the given
        `ids`, in the given order.

        """

        index = {image_id: i for i, image_id in enumerate(self.ids)}
        missing = [image_id for image_id in ids if image_id not in index]
        if missing:
            raise_error("Dataset does not contain the images %s!" % (missing),
                        LayoutError, logger)
        idx = [index[image_id] for image_id in ids]
        return(Dataset(list(ids), [self.images[i] for i in idx],
                       [self.labels[i] for i in idx],
                       [self.fovs[i] for i in idx],
                       {i: self.strata[i] for i in ids if i in self.strata}))

    def split(self):
        """
        Splits the dataset into the images outside and inside its predefined
        test split, returned as (train, test).

        """

        if not self.test_ids:
            raise_error("Dataset does not define a test split (%s)!"
                        % (TEST_NAME), LayoutError, logger)
        test = set(self.test_ids)
        return(self.subset([i for i in self.ids if i not in test]),
               self.subset([i for i in self.ids if i in test]))


# %% FUNCTION DEFINITIONS
def load_dataset(root):
    """
    Loads the dataset stored in the directory `root`.

    Raises
    ------
    EmptyDataset
        If `root/images` holds no PPM files.
    LayoutError
        If an image has no label, or if a label or FOV file is not a binary
        mask.
    DimMismatch
        If an image and its label or FOV mask differ in dimensions.

    """

    # Collect image ids
    image_dir = path.join(root, IMAGES_DIR)
    names = os.listdir(image_dir) if path.isdir(image_dir) else []
    ids = sorted(path.splitext(name)[0] for name in names
                 if name.lower().endswith('.ppm'))
    if not ids:
        raise_error("Dataset %r holds no images in %r!" % (root, image_dir),
                    EmptyDataset, logger)

    # Read all images, labels and FOV masks
    images, labels, fovs = [], [], []
    n_estimated = 0
    for image_id in ids:
        img = read_ppm(path.join(image_dir, image_id+'.ppm'))

        # Label
        label_file = path.join(root, LABELS_DIR, image_id+'.pgm')
        if not path.exists(label_file):
            raise_error("Image %r has no label file %r!"
                        % (image_id, label_file), LayoutError, logger)
        label = _read_mask(label_file)

        # FOV mask, estimated if missing
        fov_file = path.join(root, FOV_DIR, image_id+'.pgm')
        if path.exists(fov_file):
            fov = _read_mask(fov_file)
        else:
            fov = estimate_fov(img)
            n_estimated += 1

        # Check dimensions
        for name, mask in (('label', label), ('FOV mask', fov)):
            if(mask.data.shape != img.data.shape[:2]):
                raise_error("The %s of image %r has dimensions %s instead of "
                            "%s!" % (name, image_id, mask.data.shape,
                                     img.data.shape[:2]), DimMismatch,
                            logger)
        images.append(img)
        labels.append(label)
        fovs.append(fov)

    # Report estimated FOV masks
    if n_estimated:
        raise_warning("Dataset %r lacks FOV masks for %i of %i images; they "
                      "were estimated from the photographs."
                      % (root, n_estimated, len(ids)), logger)

    # Read optional strata and test split
    strata_file = path.join(root, STRATA_NAME)
    strata = read_strata(strata_file) if path.exists(strata_file) else {}
    test_file = path.join(root, TEST_NAME)
    test_ids = read_id_list(test_file) if path.exists(test_file) else None

    # Return dataset
    logger.info("Loaded %i images from %r." % (len(ids), root))
    return(Dataset(ids, images, labels, fovs, strata, test_ids))


def write_dataset(root, ids, triples, strata=None, test_ids=None):
    """
    Writes (image, label, FOV mask) `triples` under the given `ids` to the
    directory `root`, together with the optional `strata` and `test_ids`.

    """

    for name in (IMAGES_DIR, LABELS_DIR, FOV_DIR):
        _make_dir(path.join(root, name))
    for image_id, (img, label, fov) in zip(ids, triples):
        write_ppm(img, path.join(root, IMAGES_DIR, image_id+'.ppm'))
        write_mask(label, path.join(root, LABELS_DIR, image_id+'.pgm'))
        write_mask(fov, path.join(root, FOV_DIR, image_id+'.pgm'))
    if strata:
        write_strata(path.join(root, STRATA_NAME), strata)
    if test_ids:
        write_id_list(path.join(root, TEST_NAME), test_ids)


def read_strata(filename):
    """
    Reads the strata file `filename`, holding '<id><TAB><stratum>' lines, and
    returns an ordered id-to-stratum mapping.

    """

    strata = OrderedDict()
    for n, line in enumerate(_read_lines(filename), 1):
        parts = line.split('\t')
        if(len(parts) != 2 or not all(parts)):
            raise_error("Line %i of strata file %r is not '<id><TAB>"
                        "<stratum>'!" % (n, filename), LayoutError, logger)
        strata[parts[0]] = parts[1]
    return(strata)


def write_strata(filename, strata):
    _write_lines(filename, ["%s\t%s" % item for item in strata.items()])


def read_id_list(filename):
    return(_read_lines(filename))


def write_id_list(filename, ids):
    _write_lines(filename, ids)


# %% HELPER FUNCTIONS
# Reads a file that must hold a binary mask
def _read_mask(filename):
    mask = read_pgm(filename)
    if not isinstance(mask, BinaryMask):
        raise_error("File %r is not a binary mask with values {0, 255}!"
                    % (filename), LayoutError, logger)
    return(mask)


# Reads all non-empty, non-comment lines of a text file
def _read_lines(filename):
    try:
        with open(filename, 'r') as f:
            lines = [line.rstrip('\r\n') for line in f]
    except OSError as error:
        raise_error("Cannot read %r: %s" % (filename, error), IoFailure,
                    logger)
    return([line for line in lines
            if line.strip() and not line.startswith('#')])


# Writes lines to a text file
def _write_lines(filename, lines):
    try:
        with open(filename, 'w') as f:
            f.writelines("%s\n" % (line) for line in lines)
    except OSError as error:
        raise_error("Cannot write %r: %s" % (filename, error), IoFailure,
                    logger)


# Creates a directory and all of its parents
def _make_dir(dirname):
    try:
        os.makedirs(dirname, exist_ok=True)
    except OSError as error:
        raise_error("Cannot create directory %r: %s" % (dirname, error),
                    IoFailure, logger)
