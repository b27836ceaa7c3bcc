# -*- coding: utf-8 -*-

"""
MPI
===
Module that automatically picks the communicator used for distributing work,
based on whether or not the :mod:`mpi4py.MPI` module is available.
If it is not, a serial communicator with a world size of unity is used, such
that all algorithms can be written once for any number of MPI ranks.

"""


# %% IMPORTS
# Built-in imports
from copy import deepcopy as copy

# All declaration
__all__ = ['COMM_SELF', 'COMM_WORLD', 'SerialComm', 'gather_ordered', 'rank',
           'size', 'split_work']


# %% SERIALCOMM CLASS DEFINITION
# Make serial intra-communicator class
class SerialComm(object):
    """
    Serial stand-in for the :class:`mpi4py.MPI.Intracomm` class, providing
    the subset of its communication methods that are used by *vesselfcn*.
    Every method behaves as the corresponding MPI method would on a
    communicator with a single rank.

    """

    def __init__(self, name):
        self.name = name
        self._rank = 0
        self._size = 1

    # %% CLASS PROPERTIES
    @property
    def name(self):
        return(self._name)

    @name.setter
    def name(self, name):
        if isinstance(name, str):
            self._name = name
        else:
            raise TypeError("Input argument 'name' is not of type 'str'!")

    @property
    def rank(self):
        return(self._rank)

    @property
    def size(self):
        return(self._size)

    # %% VISIBLE CLASS METHODS
    def Get_name(self):
        return(self.name)

    def Get_rank(self):
        return(self.rank)

    def Get_size(self):
        return(self.size)

    def Barrier(self):
        pass

    def barrier(self):
        pass

    def bcast(self, obj, *args, **kwargs):
        return(obj)

    def gather(self, sendobj, *args, **kwargs):
        return([sendobj])

    def allgather(self, sendobj, *args, **kwargs):
        return([sendobj])

    def allreduce(self, sendobj, *args, **kwargs):
        return(copy(sendobj))


# %% COMMUNICATOR SELECTION
try:
    from mpi4py import MPI
    COMM_WORLD = MPI.COMM_WORLD
    COMM_SELF = MPI.COMM_SELF
except ImportError:
    COMM_WORLD = SerialComm('vesselfcn_COMM_WORLD')
    COMM_SELF = SerialComm('vesselfcn_COMM_SELF')

# Determine MPI size and ranks
size = COMM_WORLD.Get_size()
rank = COMM_WORLD.Get_rank()


# %% FUNCTION DEFINITIONS
# This function determines the contiguous share of work of this rank
def split_work(n_items, comm=None):
    """
    Returns the contiguous range of item indices, out of `n_items`, that the
    calling MPI rank in `comm` is responsible for.

    Parameters
    ----------
    n_items : int
        The total number of work items.

    Optional
    --------
    comm : :obj:`~MPI.Intracomm` object or None. Default: None
        The communicator to split the work over.
        If *None*, use :obj:`COMM_WORLD` instead.

    Returns
    -------
    work_range : :obj:`range`
        The indices of the work items belonging to this rank.

    Note
    ----
    The partitioning only depends on `n_items` and the communicator size, such
    that merging the results with :func:`~gather_ordered` always reproduces
    the serial order.

    """

    # If comm is None, set it to COMM_WORLD
    if comm is None:
        comm = COMM_WORLD

    # Determine the share of every rank, giving the remainder to the first
    n_ranks = comm.Get_size()
    this_rank = comm.Get_rank()
    share, rem = divmod(n_items, n_ranks)
    start = this_rank*share+min(this_rank, rem)
    stop = start+share+(this_rank < rem)

    # Return range
    return(range(start, stop))


# This function gathers the lists of all ranks in rank order on every rank
def gather_ordered(local, comm=None):
    """
    Gathers the list `local` from every MPI rank in `comm` and concatenates
    all of them in rank order. The result is available on all ranks.

    Parameters
    ----------
    local : list
        The results obtained by the calling rank, in the order of the work
        items given to it by :func:`~split_work`.

    Optional
    --------
    comm : :obj:`~MPI.Intracomm` object or None. Default: None
        The communicator to gather over.
        If *None*, use :obj:`COMM_WORLD` instead.

    Returns
    -------
    merged : list
        The concatenation of all gathered lists.

    """

    # If comm is None, set it to COMM_WORLD
    if comm is None:
        comm = COMM_WORLD

    # Gather all lists on the controller
    gathered = comm.gather(list(local), root=0)

    # Controller merges them in rank order
    if not comm.Get_rank():
        merged = [item for part in gathered for item in part]
    else:
        merged = None

    # Broadcast the merged list to all ranks
    return(comm.bcast(merged, root=0))
