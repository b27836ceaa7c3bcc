# -*- coding: utf-8 -*-

"""
Internal
========
Provides the exception hierarchy, logging helpers and other private utilities
that are used throughout the *vesselfcn* package.

"""


# %% IMPORTS
# Built-in imports
import logging

# Package imports
import e13tools as e13
import numpy as np

# vesselfcn imports
from vesselfcn import _mpi

# All declaration
__all__ = ['BadK', 'BadMagic', 'ChannelMismatch', 'DataError',
           'DegenerateDataset', 'DegenerateRange', 'DimMismatch',
           'EmptyDataset', 'EmptyFov', 'IndivisibleInput',
           'InvalidConfigValue', 'InvalidGamma', 'IoFailure', 'LayoutError',
           'MalformedHeader', 'MissingPrediction', 'NumericAbort',
           'OddSpatialDims', 'PatchLargerThanImage', 'ShapeMismatch',
           'SingleClass', 'StrideExceedsPatch', 'TooFewPatches',
           'TruncatedData', 'UnknownConfigKey', 'UnsupportedMaxval',
           'UsageError', 'VersionMismatch', 'VesselFCNError', 'check_finite',
           'get_logger', 'raise_error', 'raise_warning', 'rprint']


# %% EXCEPTION DEFINITIONS
# Base class of all errors raised by vesselfcn
class VesselFCNError(Exception):
    """
    Base class of all *vesselfcn* errors. The :attr:`~exit_code` is used by
    the command-line interface.

    """

    exit_code = 2


# Errors caused by invalid user input (exit code 1)
class UsageError(VesselFCNError, e13.InputError):
    exit_code = 1


class InvalidGamma(UsageError):
    pass


class StrideExceedsPatch(UsageError):
    pass


class BadK(UsageError):
    pass


class UnknownConfigKey(UsageError):
    pass


class InvalidConfigValue(UsageError):
    pass


# Errors caused by invalid or unsuitable data (exit code 2)
class DataError(VesselFCNError):
    exit_code = 2


class IoFailure(DataError):
    pass


class MalformedHeader(DataError):
    pass


class UnsupportedMaxval(DataError):
    pass


class TruncatedData(DataError):
    pass


class DegenerateDataset(DataError):
    pass


class DegenerateRange(DataError):
    pass


class PatchLargerThanImage(DataError):
    pass


class MissingPrediction(DataError):
    pass


class TooFewPatches(DataError):
    pass


class DimMismatch(DataError):
    pass


class EmptyFov(DataError):
    pass


class SingleClass(DataError):
    pass


class EmptyDataset(DataError):
    pass


class LayoutError(DataError):
    pass


class BadMagic(DataError):
    pass


class VersionMismatch(DataError):
    pass


class ShapeMismatch(DataError, e13.ShapeError):
    pass


class OddSpatialDims(ShapeMismatch):
    pass


class ChannelMismatch(ShapeMismatch):
    pass


class IndivisibleInput(ShapeMismatch):
    pass


# Non-finite values during training or inference (exit code 3)
class NumericAbort(VesselFCNError):
    exit_code = 3


# %% LOGGING
# Filter that prepends the MPI rank when running with more than one rank
class RankFilter(logging.Filter):
    def filter(self, record):
        if(_mpi.size > 1 and not getattr(record, '_ranked', False)):
            record.msg = "Rank %i: %s" % (_mpi.rank, record.msg)
            record._ranked = True
        return(True)


# Returns the logger of a vesselfcn module
def get_logger(name):
    """
    Returns the :obj:`~logging.Logger` called `name`, which is placed in the
    *vesselfcn* logger hierarchy and prepends the world rank of the MPI
    process to all messages if the size of :obj:`~COMM_WORLD` is more than 1.

    """

    # Make sure the name lives in the vesselfcn hierarchy
    if not name.startswith('vesselfcn'):
        name = "vesselfcn.%s" % (name)

    # Obtain logger and attach the rank filter once
    logger = logging.getLogger(name)
    if not any(isinstance(f, RankFilter) for f in logger.filters):
        logger.addFilter(RankFilter())
    return(logger)


# Redefine the print function to include the MPI rank if MPI is used
def rprint(*args, **kwargs):
    """
    Custom :func:`~print` function that prepends the world rank of the MPI
    process that calls it to the message if the size of :obj:`~COMM_WORLD`
    is more than 1.
    Takes the same input arguments as the normal :func:`~print` function.

    """

    # If using MPI (size > 1), prepend rank to message
    if(_mpi.size > 1):
        args = list(args)
        args.insert(0, "Rank %i:" % (_mpi.rank))
    print(*args, **kwargs)


# Logs an error message and raises the given error type
def raise_error(err_msg, err_type, logger):
    """
    Logs the error message `err_msg` with `logger` and raises it as
    `err_type`.

    """

    e13.raise_error(err_msg, err_type, logger)


# Logs a warning message and emits it as a warning
def raise_warning(warn_msg, logger, stacklevel=2):
    """
    Logs the warning message `warn_msg` with `logger` and emits it as a
    :class:`~UserWarning`.

    """

    e13.raise_warning(warn_msg, UserWarning, logger, stacklevel+1)


# %% FUNCTION DEFINITIONS
# Aborts when an array contains non-finite values
def check_finite(array, where, logger):
    """
    Raises a :class:`~NumericAbort` naming `where` if `array` contains any NaN
    or infinite values.

    """

    if not np.isfinite(array).all():
        raise_error("Non-finite values encountered in %s!" % (where),
                    NumericAbort, logger)
