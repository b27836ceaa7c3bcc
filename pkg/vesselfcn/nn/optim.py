# -*- coding: utf-8 -*-

"""
Optimization
============
Provides the Adam optimizer, either as the functional :func:`~adam_step` on
lists of parameter and gradient arrays, or as the :class:`~Adam` class that
updates all parameters of a :obj:`~vesselfcn.nn.layers.Module` in place.

"""


# %% IMPORTS
# Built-in imports
from dataclasses import dataclass, field

# Package imports
import numpy as np

# vesselfcn imports
from vesselfcn._internal import ShapeMismatch, get_logger, raise_error

# All declaration
__all__ = ['Adam', 'AdamState', 'adam_step']

# Initialize logger
logger = get_logger(__name__)


# %% CLASS DEFINITIONS
@dataclass
class AdamState(object):
    """
    State of the Adam optimizer: the step count, the first and second moment
    estimates of every parameter and the hyperparameters.

    The moments are created as zeros on the first step.

    """

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


# %% FUNCTION DEFINITIONS
def adam_step(params, grads, state):
    """
    Performs a single bias-corrected Adam update of all `params` in place.

    Parameters
    ----------
    params : list of :obj:`~numpy.ndarray` objects
        The parameters to update.
    grads : list of :obj:`~numpy.ndarray` objects
        The gradients of the loss with respect to `params`.
    state : :obj:`~AdamState` object
        The optimizer state, which is updated in place.

    Returns
    -------
    params : list of :obj:`~numpy.ndarray` objects
        The updated `params`.
    state : :obj:`~AdamState` object
        The updated `state`.

    """

    # Check shapes
    if(len(params) != len(grads)):
        raise_error("Got %i parameters but %i gradients!"
                    % (len(params), len(grads)), ShapeMismatch, logger)
    for i, (p, g) in enumerate(zip(params, grads)):
        if(p.shape != g.shape):
            raise_error("Gradient %i has shape %s instead of %s!"
                        % (i, g.shape, p.shape), ShapeMismatch, logger)

    # Initialize moments on the first step
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    elif(len(state.m) != len(params) or
         any(m.shape != p.shape for m, p in zip(state.m, params))):
        raise_error("Optimizer state does not match the given parameters!",
                    ShapeMismatch, logger)

    # Bias corrections of this step
    state.step += 1
    corr1 = 1-state.beta1**state.step
    corr2 = 1-state.beta2**state.step

    # Update every parameter
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1-state.beta1)*g
        v *= state.beta2
        v += (1-state.beta2)*g*g
        m_hat = m/corr1
        v_hat = v/corr2
        p -= (state.lr*m_hat/(np.sqrt(v_hat)+state.epsilon)).astype(p.dtype)

    # Return parameters and state
    return(params, state)


class Adam(object):
    """
    Adam optimizer over all parameters of the given `module`.

    """

    def __init__(self, module, lr=1e-3, beta1=0.9, beta2=0.999,
                 epsilon=1e-8):
        self.module = module
        self.state = AdamState(lr, beta1, beta2, epsilon)

    def step(self):
        params, grads = [], []
        for _, value, grad in self.module.named_parameters():
            params.append(value)
            grads.append(grad)
        adam_step(params, grads, self.state)

    def zero_grad(self):
        self.module.zero_grad()
