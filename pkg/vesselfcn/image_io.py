# -*- coding: utf-8 -*-

"""
Image I/O
=========
Provides the image containers used throughout *vesselfcn* and bit-exact
readers and writers for them in the portable NetPBM formats: P6 for color
images, 8-bit P5 for grayscale images and binary masks, and 16-bit
big-endian P5 for probability maps.

All rounding in *vesselfcn* rounds half away from zero, as implemented by
:func:`~round_half_away`.

"""


# %% IMPORTS
# Built-in imports
from dataclasses import dataclass

# Package imports
import numpy as np

# vesselfcn imports
from vesselfcn._internal import (
    DataError, IoFailure, MalformedHeader, TruncatedData, UnsupportedMaxval,
    get_logger, raise_error)

# All declaration
__all__ = ['BinaryMask', 'GrayImage', 'ProbMap', 'RgbImage', 'read_pgm',
           'read_ppm', 'read_prob_map', 'round_half_away', 'write_mask',
           'write_pgm', 'write_ppm', 'write_prob_map']

# Initialize logger
logger = get_logger(__name__)

# Sample scale of probability maps
PROB_MAXVAL = 65535


# %% IMAGE CONTAINERS
@dataclass(frozen=True)
class RgbImage(object):
    """
    8-bit color image with row-major `data` of shape (height, width, 3),
    holding the R, G and B channels.

    """

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if(data.ndim != 3 or data.shape[2] != 3 or min(data.shape[:2]) < 1):
            raise_error("RgbImage data must have shape (height, width, 3) "
                        "with height, width >= 1, not %s!" % (data.shape,),
                        DataError, logger)
        object.__setattr__(self, 'data', data.astype(np.uint8, copy=False))

    @property
    def height(self):
        return(self.data.shape[0])

    @property
    def width(self):
        return(self.data.shape[1])


@dataclass(frozen=True)
class GrayImage(object):
    """
    Grayscale image with finite 64-bit floating-point intensities stored
    row-major in `data` of shape (height, width).

    """

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        _check_2D(data, 'GrayImage')
        if not np.isfinite(data).all():
            raise_error("GrayImage data must be finite!", DataError, logger)
        object.__setattr__(self, 'data', data)

    @property
    def height(self):
        return(self.data.shape[0])

    @property
    def width(self):
        return(self.data.shape[1])


@dataclass(frozen=True)
class BinaryMask(object):
    """
    Binary mask with values in {0, 1} stored row-major in `data` of shape
    (height, width). Used for vessel labels, FOV masks and segmentations.

    """

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        _check_2D(data, 'BinaryMask')
        if not np.isin(data, (0, 1)).all():
            raise_error("BinaryMask data may only contain 0 and 1!",
                        DataError, logger)
        object.__setattr__(self, 'data', data.astype(np.uint8, copy=False))

    @property
    def height(self):
        return(self.data.shape[0])

    @property
    def width(self):
        return(self.data.shape[1])


@dataclass(frozen=True)
class ProbMap(object):
    """
    Per-pixel vessel probabilities in [0, 1] stored row-major in `data` of
    shape (height, width).

    """

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        _check_2D(data, 'ProbMap')
        if not ((data >= 0) & (data <= 1)).all():
            raise_error("ProbMap data must lie in [0, 1]!", DataError,
                        logger)
        object.__setattr__(self, 'data', data)

    @property
    def height(self):
        return(self.data.shape[0])

    @property
    def width(self):
        return(self.data.shape[1])


# %% FUNCTION DEFINITIONS
def round_half_away(values):
    """
    Rounds `values` to the nearest integer, rounding halves away from zero.

    """

    values = np.asarray(values, dtype=np.float64)
    return(np.sign(values)*np.floor(np.abs(values)+0.5))


def read_ppm(path):
    """
    Reads the binary NetPBM (P6) color image stored at `path`.

    Parameters
    ----------
    path : str
        Path to the P6 file. Its maxval must be 255.

    Returns
    -------
    img : :obj:`~RgbImage` object
        The image, with all pixel values preserved exactly.

    """

    # Read file and parse its header
    raw = _read_bytes(path)
    magic, width, height, maxval, offset = _parse_header(raw, path)
    if(magic != b'P6'):
        raise_error("File %r is not a binary PPM (P6) file!" % (path),
                    MalformedHeader, logger)
    if(maxval != 255):
        raise_error("PPM file %r has unsupported maxval %i!"
                    % (path, maxval), UnsupportedMaxval, logger)

    # Obtain payload
    payload = _get_payload(raw, offset, 3*width*height, path)
    data = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)

    # Return image
    return(RgbImage(data.copy()))


def read_pgm(path):
    """
    Reads the binary NetPBM (P5) grayscale image stored at `path`.

    8-bit files only containing the values 0 and 255 are recognized as masks
    and are returned as a :obj:`~BinaryMask` with 255 mapped to 1. Callers
    requiring a mask must check the returned type.

    Parameters
    ----------
    path : str
        Path to the P5 file. Its maxval must be 255 or 65535.

    Returns
    -------
    img : :obj:`~GrayImage` or :obj:`~BinaryMask` object
        The image, with values as stored in the file.

    """

    # Read file and parse its header
    raw = _read_bytes(path)
    magic, width, height, maxval, offset = _parse_header(raw, path)
    if(magic != b'P5'):
        raise_error("File %r is not a binary PGM (P5) file!" % (path),
                    MalformedHeader, logger)

    # Determine sample type
    if(maxval == 255):
        dtype = np.dtype('u1')
    elif(maxval == 65535):
        dtype = np.dtype('>u2')
    else:
        raise_error("PGM file %r has unsupported maxval %i!"
                    % (path, maxval), UnsupportedMaxval, logger)

    # Obtain payload
    payload = _get_payload(raw, offset, dtype.itemsize*width*height, path)
    data = np.frombuffer(payload, dtype=dtype).reshape(height, width)

    # Detect masks structurally
    if(maxval == 255 and np.isin(data, (0, 255)).all()):
        return(BinaryMask((data == 255).astype(np.uint8)))
    else:
        return(GrayImage(data.astype(np.float64)))


def read_prob_map(path):
    """
    Reads the probability map written by :func:`~write_prob_map` at `path`.

    """

    img = read_pgm(path)
    if isinstance(img, BinaryMask):
        raise_error("File %r holds an 8-bit mask, not a probability map!"
                    % (path), UnsupportedMaxval, logger)
    return(ProbMap(img.data/PROB_MAXVAL))


def write_ppm(img, path):
    """
    Writes the :obj:`~RgbImage` `img` to `path` as a P6 file.

    """

    header = _make_header(b'P6', img.width, img.height, 255)
    _write_bytes(path, header+img.data.tobytes())


def write_pgm(img, path):
    """
    Writes the :obj:`~GrayImage` `img` to `path` as an 8-bit P5 file.
    Intensities are rounded half away from zero and clipped to [0, 255].

    """

    data = np.clip(round_half_away(img.data), 0, 255).astype(np.uint8)
    header = _make_header(b'P5', img.width, img.height, 255)
    _write_bytes(path, header+data.tobytes())


def write_mask(mask, path):
    """
    Writes the :obj:`~BinaryMask` `mask` to `path` as an 8-bit P5 file with
    values {0, 255}.

    """

    data = (mask.data*255).astype(np.uint8)
    header = _make_header(b'P5', mask.width, mask.height, 255)
    _write_bytes(path, header+data.tobytes())


def write_prob_map(p, path):
    """
    Writes the :obj:`~ProbMap` `p` to `path` as a 16-bit big-endian P5 file,
    storing every probability as ``round(p*65535)``.

    Reading the file back with :func:`~read_prob_map` reproduces `p` within
    ``0.5/65535`` per pixel.

    """

    data = round_half_away(p.data*PROB_MAXVAL).astype('>u2')
    header = _make_header(b'P5', p.width, p.height, PROB_MAXVAL)
    _write_bytes(path, header+data.tobytes())


# %% HELPER FUNCTIONS
# Checks that a container holds a non-empty 2D array
def _check_2D(data, name):
    if(data.ndim != 2 or min(data.shape) < 1):
        raise_error("%s data must be 2D with height, width >= 1, not %s!"
                    % (name, data.shape), DataError, logger)


# Reads all bytes of a file
def _read_bytes(path):
    try:
        with open(path, 'rb') as f:
            return(f.read())
    except OSError as error:
        raise_error("Cannot read %r: %s" % (path, error), IoFailure, logger)


# Writes all bytes to a file
def _write_bytes(path, raw):
    try:
        with open(path, 'wb') as f:
            f.write(raw)
    except OSError as error:
        raise_error("Cannot write %r: %s" % (path, error), IoFailure, logger)


# Makes a canonical NetPBM header
def _make_header(magic, width, height, maxval):
    return(b"%s\n%i %i\n%i\n" % (magic, width, height, maxval))


# Parses a NetPBM header, skipping comments
def _parse_header(raw, path):
    """
    Parses the magic number, width, height and maxval of the NetPBM file
    contents `raw`, and returns them together with the offset of the payload.

    """

    # Collect the four header tokens
    tokens = []
    pos = 0
    while(len(tokens) < 4):
        # Skip whitespace and comments
        while(pos < len(raw)):
            if raw[pos:pos+1].isspace():
                pos += 1
            elif(raw[pos:pos+1] == b'#'):
                end = raw.find(b'\n', pos)
                pos = len(raw) if(end == -1) else end+1
            else:
                break

        # Read token
        start = pos
        while(pos < len(raw) and not raw[pos:pos+1].isspace() and
              raw[pos:pos+1] != b'#'):
            pos += 1
        if(start == pos):
            raise_error("File %r has an incomplete NetPBM header!" % (path),
                        MalformedHeader, logger)
        tokens.append(raw[start:pos])

    # A single whitespace character separates the header from the payload
    if(pos >= len(raw) or not raw[pos:pos+1].isspace()):
        raise_error("File %r has no payload after its NetPBM header!"
                    % (path), TruncatedData, logger)
    pos += 1

    # Convert tokens
    magic = tokens[0]
    try:
        width, height, maxval = map(int, tokens[1:])
    except ValueError:
        raise_error("File %r has a non-integer NetPBM header field!"
                    % (path), MalformedHeader, logger)
    if(magic not in (b'P5', b'P6') or min(width, height, maxval) < 1):
        raise_error("File %r has an invalid NetPBM header!" % (path),
                    MalformedHeader, logger)

    # Return header values
    return(magic, width, height, maxval, pos)


# Obtains a payload of the given length
def _get_payload(raw, offset, n_bytes, path):
    payload = raw[offset:offset+n_bytes]
    if(len(payload) < n_bytes):
        raise_error("File %r holds %i payload bytes, but its header requires "
                    "%i!" % (path, len(payload), n_bytes), TruncatedData,
                    logger)
    return(payload)
