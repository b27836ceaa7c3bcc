# -*- coding: utf-8 -*-

"""
Layers
======
Provides the :class:`~Module` base class of all network components and the
layers wrapping the operations of :mod:`vesselfcn.nn.functional` together
with their parameters, gradients and train/eval mode.

"""


# %% IMPORTS
# Built-in imports
from collections import OrderedDict

# Package imports
import numpy as np

# vesselfcn imports
from vesselfcn._internal import check_finite, get_logger
from vesselfcn.nn import functional as F

# All declaration
__all__ = ['Add', 'BatchNorm', 'Concat', 'Conv2D', 'Dropout', 'MaxPool2',
           'Module', 'ReLU', 'Upsample2', 'he_normal']

# Initialize logger
logger = get_logger(__name__)


# %% FUNCTION DEFINITIONS
# Draws kernels with standard deviation sqrt(2/fan_in)
def he_normal(shape, rng, dtype):
    """
    Returns kernels of the given `shape` drawn from a zero-mean normal
    distribution with standard deviation ``sqrt(2/fan_in)``.

    """

    fan_in = int(np.prod(shape[1:]))
    return(rng.normal(0, np.sqrt(2/fan_in), size=shape).astype(dtype))


# %% MODULE CLASS DEFINITION
class Module(object):
    """
    Base class of all network components.

    A module owns named parameter arrays with gradients of the same shapes,
    named buffers (non-trainable state like running statistics) and named
    child modules. Its train/eval mode is propagated to all children.

    """

    def __init__(self):
        self.params = OrderedDict()
        self.grads = OrderedDict()
        self.buffers = OrderedDict()
        self.children = OrderedDict()
        self.training = True

    # Registers a parameter with a zero gradient
    def add_param(self, name, value):
        self.params[name] = value
        self.grads[name] = np.zeros_like(value)
        return(value)

    # Registers a child module
    def add_child(self, name, module):
        self.children[name] = module
        return(module)

    # %% CLASS PROPERTIES
    @property
    def n_params(self):
        """
        int: Total number of trainable values of this module.

        """

        return(sum(p.size for _, p, _ in self.named_parameters()))

    # %% GENERAL CLASS METHODS
    def named_parameters(self, prefix=''):
        """
        Yields (name, parameter, gradient) triples of this module and all of
        its children, in registration order.

        """

        for name, value in self.params.items():
            yield(prefix+name, value, self.grads[name])
        for child_name, child in self.children.items():
            for item in child.named_parameters(prefix+child_name+'.'):
                yield(item)

    def named_buffers(self, prefix=''):
        """
        Yields (name, buffer) pairs of this module and all of its children.

        """

        for name, value in self.buffers.items():
            yield(prefix+name, value)
        for child_name, child in self.children.items():
            for item in child.named_buffers(prefix+child_name+'.'):
                yield(item)

    def state_arrays(self):
        """
        Returns an ordered dict of all parameters and buffers by full name.

        """

        state = OrderedDict(
            (name, value) for name, value, _ in self.named_parameters())
        state.update(self.named_buffers())
        return(state)

    def train(self, mode=True):
        self.training = mode
        for child in self.children.values():
            child.train(mode)
        return(self)

    def eval(self):
        return(self.train(False))

    def zero_grad(self):
        for _, _, grad in self.named_parameters():
            grad[...] = 0


# %% LAYER CLASS DEFINITIONS
class Conv2D(Module):
    """
    Stride-1 zero-padded convolution with `k` x `k` kernels (`k` is 1 or 3).

    """

    def __init__(self, in_c, out_c, k, rng, dtype=np.float32, bias=True):
        super().__init__()
        self.add_param('weight', he_normal((out_c, in_c, k, k), rng, dtype))
        if bias:
            self.add_param('bias', np.zeros(out_c, dtype=dtype))
        self._cache = None

    def forward(self, x):
        y, self._cache = F.conv_forward(x, self.params['weight'],
                                        self.params.get('bias'))
        return(y)

    def backward(self, grad_out):
        grad_x, grad_w, grad_b = F.conv_backward(grad_out, self._cache)
        self.grads['weight'] += grad_w
        if grad_b is not None:
            self.grads['bias'] += grad_b
        self._cache = None
        return(grad_x)


class ReLU(Module):
    def forward(self, x):
        y, self._mask = F.relu_forward(x)
        return(y)

    def backward(self, grad_out):
        return(F.relu_backward(grad_out, self._mask))


class Dropout(Module):
    """
    Inverted dropout with the given `rate`, drawing its masks from `rng`.

    """

    def __init__(self, rate, rng):
        super().__init__()
        self.rate = rate
        self.rng = rng

    def forward(self, x):
        y, self._scale = F.dropout_forward(x, self.rate, self.rng,
                                           self.training)
        return(y)

    def backward(self, grad_out):
        return(F.dropout_backward(grad_out, self._scale))


class MaxPool2(Module):
    def forward(self, x):
        y, self._cache = F.maxpool2_forward(x)
        return(y)

    def backward(self, grad_out):
        return(F.maxpool2_backward(grad_out, self._cache))


class Upsample2(Module):
    def forward(self, x):
        return(F.upsample2_forward(x)[0])

    def backward(self, grad_out):
        return(F.upsample2_backward(grad_out))


class Concat(Module):
    def forward(self, *xs):
        y, self._channels = F.concat_forward(*xs)
        return(y)

    def backward(self, grad_out):
        return(F.concat_backward(grad_out, self._channels))


class Add(Module):
    def forward(self, a, b):
        return(F.add_forward(a, b)[0])

    def backward(self, grad_out):
        return(F.add_backward(grad_out))


class BatchNorm(Module):
    """
    Per-channel batch normalization over `channels` channels with learnable
    scale and shift, and running statistics updated with `momentum`.

    """

    def __init__(self, channels, dtype=np.float32, momentum=0.9, eps=1e-5):
        super().__init__()
        self.add_param('gamma', np.ones(channels, dtype=dtype))
        self.add_param('beta', np.zeros(channels, dtype=dtype))
        self.buffers['running_mean'] = np.zeros(channels, dtype=dtype)
        self.buffers['running_var'] = np.ones(channels, dtype=dtype)
        self.momentum = momentum
        self.eps = eps

    def forward(self, x):
        y, self._cache = F.batchnorm_forward(
            x, self.params['gamma'], self.params['beta'],
            self.buffers['running_mean'], self.buffers['running_var'],
            self.training, self.momentum, self.eps)
        return(y)

    def backward(self, grad_out):
        grad_x, grad_gamma, grad_beta = F.batchnorm_backward(grad_out,
                                                             self._cache)
        self.grads['gamma'] += grad_gamma
        self.grads['beta'] += grad_beta
        return(grad_x)


# %% HELPERS SHARED BY THE MODELS
# Runs a layer forward and aborts on non-finite outputs
def checked(name, layer, *xs):
    y = layer.forward(*xs)
    check_finite(y, "the output of layer %r" % (name), logger)
    return(y)
