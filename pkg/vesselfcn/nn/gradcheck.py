# -*- coding: utf-8 -*-

"""
Gradient checking
=================
Provides the comparison of the analytic backward passes of layers, blocks and
models against central finite differences.

"""


# %% IMPORTS
# Package imports
import numpy as np

# vesselfcn imports
from vesselfcn._internal import get_logger
from vesselfcn.nn.blocks import SharedResidualBlock
from vesselfcn.nn.layers import Dropout, MaxPool2, ReLU

# All declaration
__all__ = ['check_layer_gradients', 'relative_error']

# Initialize logger
logger = get_logger(__name__)

# Number of times the step is shrunk tenfold when it straddles a kink
N_SHRINKS = 3


# %% FUNCTION DEFINITIONS
def relative_error(analytic, numeric, floor=1e-6):
    """
    Returns the elementwise relative error between `analytic` and `numeric`,
    using `floor` as the smallest denominator.

    """

    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = np.maximum(np.maximum(abs(analytic), abs(numeric)), floor)
    return(abs(analytic-numeric)/scale)


def check_layer_gradients(layer, x, n_coords=10, h=1e-5, seed=0):
    """
    Checks the backward pass of `layer` on input `x` against central finite
    differences of the scalar loss ``sum(forward(x)*r)``, with `r` a fixed
    random projection of the output.

    Parameters
    ----------
    layer : :obj:`~vesselfcn.nn.layers.Module` object
        A module with a single input, whose parameters should be 64-bit.
    x : array_like
        The input to check the gradients at.

    Optional
    --------
    n_coords : int. Default: 10
        The number of randomly sampled coordinates that are checked in the
        input and in every parameter tensor. Small tensors are checked
        completely.
    h : float. Default: 1e-5
        The finite-difference step.
    seed : int. Default: 0
        Seed for the projection and the coordinate sampling.

    Returns
    -------
    errors : dict of float
        The maximum relative error of the input (``'input'``) and of every
        named parameter.

    Note
    ----
    The random generators of all dropout layers are restored before every
    forward pass, such that every pass draws the same dropout masks.
    If the activation pattern of any ReLU or max pooling layer differs between
    the two sides of a central difference, the step straddles a kink and is
    shrunk tenfold, at most `N_SHRINKS` times.

    """

    rng = np.random.default_rng(seed)
    x = np.array(x, dtype=np.float64)
    generators = _dropout_generators(layer)
    states = [gen.bit_generator.state for gen in generators]

    # Runs the forward pass with identical dropout masks
    def forward():
        for gen, state in zip(generators, states):
            gen.bit_generator.state = state
        return(layer.forward(x))

    # Analytic gradients
    y = forward()
    proj = rng.normal(size=y.shape)
    layer.zero_grad()
    grad_x = layer.backward(proj)
    analytic = [('input', x, grad_x)]
    analytic.extend((name, value, grad.copy())
                    for name, value, grad in layer.named_parameters())

    # Loss and kink pattern as a function of the current inputs and parameters
    def loss():
        value = float((forward()*proj).sum())
        return(value, _kink_pattern(layer))

    # Central difference at a single coordinate of a flattened array
    def difference(flat, coord):
        orig = flat[coord]
        step = h
        for shrink in range(N_SHRINKS+1):
            flat[coord] = orig+step
            loss_plus, pattern_plus = loss()
            flat[coord] = orig-step
            loss_min, pattern_min = loss()
            flat[coord] = orig
            if(shrink == N_SHRINKS or
               _same_pattern(pattern_plus, pattern_min)):
                break
            step /= 10
        return((loss_plus-loss_min)/(2*step))

    # Compare against finite differences
    errors = {}
    for name, value, grad in analytic:
        n = min(n_coords, value.size)
        coords = rng.choice(value.size, size=n, replace=False)
        flat = value.reshape(-1)
        numeric = np.empty(n)
        for i, coord in enumerate(coords):
            numeric[i] = difference(flat, coord)
        errors[name] = float(relative_error(
            grad.reshape(-1)[coords], numeric).max())
        logger.debug("Maximum relative gradient error of %r: %.3g",
                     name, errors[name])

    # Return errors
    return(errors)


# %% HELPER FUNCTIONS
# Collects the distinct random generators of all dropout layers of a module
def _dropout_generators(module):
    generators = []
    stack = [module]
    while stack:
        current = stack.pop()
        if(isinstance(current, Dropout) and
           all(current.rng is not gen for gen in generators)):
            generators.append(current.rng)
        stack.extend(current.children.values())
    return(generators)


# Collects the activation patterns of all ReLU and max pooling sites
def _kink_pattern(module):
    pattern = []
    stack = [module]
    while stack:
        current = stack.pop()
        if isinstance(current, ReLU):
            pattern.append(current._mask)
        elif isinstance(current, MaxPool2):
            pattern.append(current._cache[1])
        elif isinstance(current, SharedResidualBlock):
            pattern.extend([current._relu1, current._relu2])
        stack.extend(current.children.values())
    return(pattern)


# Checks whether two activation patterns are identical
def _same_pattern(pattern1, pattern2):
    return(all(np.array_equal(a, b) for a, b in zip(pattern1, pattern2)))
