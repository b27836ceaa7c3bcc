# -*- coding: utf-8 -*-

"""
Weights I/O
===========
Provides the reading and writing of network weights files.

A weights file starts with the magic bytes ``FCNW``, the format version and
the number of tensors, all as little-endian unsigned 32-bit integers. Every
tensor follows as its name (u16 length plus UTF-8 bytes), its rank (u8), its
dimensions (u32 each) and its values as little-endian 32-bit floats in
row-major order.

Next to all parameters and buffers of the model, the file holds the tensor
``model.hyper``, which records the architecture of the model such that
:func:`~load_weights` can rebuild it.

"""


# %% IMPORTS
# Built-in imports
from collections import OrderedDict
import struct

# Package imports
import numpy as np

# vesselfcn imports
from vesselfcn._internal import (
    BadMagic, ShapeMismatch, TruncatedData, VersionMismatch, get_logger,
    raise_error)
from vesselfcn.image_io import _read_bytes, _write_bytes
from vesselfcn.nn.models import build_model

# All declaration
__all__ = ['load_weights', 'read_tensors', 'save_weights', 'write_tensors']

# Initialize logger
logger = get_logger(__name__)

# Format constants
MAGIC = b'FCNW'
VERSION = 1
HYPER_NAME = 'model.hyper'
MODEL_IDS = {'unet': 0, 'laddernet': 1}


# %% FUNCTION DEFINITIONS
def write_tensors(tensors, path):
    """
    Writes the ordered name-to-array mapping `tensors` to the weights file
    `path`.

    """

    chunks = [MAGIC, struct.pack('<II', VERSION, len(tensors))]
    for name, value in tensors.items():
        raw_name = name.encode('utf-8')
        value = np.ascontiguousarray(value, dtype='<f4')
        chunks.append(struct.pack('<H', len(raw_name)))
        chunks.append(raw_name)
        chunks.append(struct.pack('<B', value.ndim))
        chunks.append(struct.pack('<%iI' % (value.ndim), *value.shape))
        chunks.append(value.tobytes())
    _write_bytes(path, b''.join(chunks))


def read_tensors(path):
    """
    Reads the weights file `path` and returns its tensors as an ordered
    name-to-array mapping of 32-bit floats.

    """

    raw = _read_bytes(path)

    # Check magic and version
    if(raw[:4] != MAGIC):
        raise_error("File %r is not a weights file (magic %r)!"
                    % (path, raw[:4]), BadMagic, logger)
    pos = 4
    version, n_tensors = _unpack('<II', raw, pos, path)
    pos += 8
    if(version != VERSION):
        raise_error("Weights file %r has version %i, but only version %i is "
                    "supported!" % (path, version, VERSION), VersionMismatch,
                    logger)

    # Read all tensors
    tensors = OrderedDict()
    for _ in range(n_tensors):
        name_len, = _unpack('<H', raw, pos, path)
        pos += 2
        name = raw[pos:pos+name_len].decode('utf-8')
        pos += name_len
        rank, = _unpack('<B', raw, pos, path)
        pos += 1
        shape = _unpack('<%iI' % (rank), raw, pos, path)
        pos += 4*rank
        n_bytes = 4*int(np.prod(shape, dtype=np.int64))
        if(pos+n_bytes > len(raw)):
            raise_error("Weights file %r ends inside tensor %r!"
                        % (path, name), TruncatedData, logger)
        tensors[name] = np.frombuffer(raw, dtype='<f4', count=n_bytes//4,
                                      offset=pos).reshape(shape).copy()
        pos += n_bytes

    # Return tensors
    return(tensors)


def save_weights(model, path):
    """
    Saves all parameters and buffers of `model`, together with its
    architecture, to the weights file `path`.

    """

    hyper = model.hyper
    tensors = OrderedDict()
    tensors[HYPER_NAME] = np.array(
        [MODEL_IDS[model.name], hyper['base_channels'], hyper['depth'],
         hyper.get('branch_pairs', 0), hyper['dropout']])
    tensors.update(model.state_arrays())
    write_tensors(tensors, path)
    logger.info("Saved %s weights to %r.", model.name, path)


def load_weights(path, model=None):
    """
    Loads the weights file `path`.

    Parameters
    ----------
    path : str
        The weights file to read.

    Optional
    --------
    model : :obj:`~vesselfcn.nn.models.Model` object or None. Default: None
        The model to load the weights into. If *None*, the model is built
        from the architecture recorded in the file.

    Returns
    -------
    model : :obj:`~vesselfcn.nn.models.Model` object
        The model holding the loaded weights, in evaluation mode.

    Raises
    ------
    ShapeMismatch
        If the tensors in the file do not match those of `model`.

    """

    tensors = read_tensors(path)

    # Build the recorded architecture if required
    hyper = tensors.pop(HYPER_NAME, None)
    if model is None:
        if(hyper is None or hyper.shape != (5,)):
            raise_error("Weights file %r does not record its architecture!"
                        % (path), ShapeMismatch, logger)
        names = {v: k for k, v in MODEL_IDS.items()}
        model = build_model(names[int(hyper[0])], int(hyper[1]),
                            int(hyper[2]), round(float(hyper[4]), 6),
                            max(int(hyper[3]), 1))

    # Check that names and shapes match exactly
    state = model.state_arrays()
    if(list(state) != list(tensors) or
       any(state[name].shape != tensors[name].shape for name in state)):
        raise_error("Tensors in weights file %r do not match the %s model!"
                    % (path, model.name), ShapeMismatch, logger)

    # Copy values into the model
    for name, value in state.items():
        value[...] = tensors[name]
    logger.info("Loaded %s weights from %r.", model.name, path)
    return(model.eval())


# %% HELPER FUNCTIONS
# Unpacks values at an offset, failing on truncated files
def _unpack(fmt, raw, pos, path):
    try:
        return(struct.unpack_from(fmt, raw, pos))
    except struct.error:
        raise_error("Weights file %r is truncated!" % (path), TruncatedData,
                    logger)
