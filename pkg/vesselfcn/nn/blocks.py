# -*- coding: utf-8 -*-

"""
Blocks
======
Provides the composite building blocks of the networks: the double
convolution stage of U-Net, the resampling stages of LadderNet and the
shared-weights residual block.

"""


# %% IMPORTS
# Package imports
import numpy as np

# vesselfcn imports
from vesselfcn._internal import ChannelMismatch, get_logger, raise_error
from vesselfcn.nn import functional as F
from vesselfcn.nn.layers import (
    BatchNorm, Conv2D, Dropout, MaxPool2, Module, ReLU, Upsample2, checked,
    he_normal)

# All declaration
__all__ = ['ConvStage', 'DownStage', 'SharedResidualBlock', 'UpStage']

# Initialize logger
logger = get_logger(__name__)


# %% CLASS DEFINITIONS
class ConvStage(Module):
    """
    Two consecutive 3 x 3 convolutions, each followed by a ReLU, with dropout
    in between.

    """

    def __init__(self, in_c, out_c, dropout, rng, drop_rng, dtype, name):
        super().__init__()
        self.name = name
        self.conv1 = self.add_child('conv1', Conv2D(in_c, out_c, 3, rng,
                                                    dtype))
        self.relu1 = self.add_child('relu1', ReLU())
        self.drop = self.add_child('drop', Dropout(dropout, drop_rng))
        self.conv2 = self.add_child('conv2', Conv2D(out_c, out_c, 3, rng,
                                                    dtype))
        self.relu2 = self.add_child('relu2', ReLU())

    def forward(self, x):
        for name, layer in self.children.items():
            x = checked("%s.%s" % (self.name, name), layer, x)
        return(x)

    def backward(self, grad_out):
        for layer in reversed(list(self.children.values())):
            grad_out = layer.backward(grad_out)
        return(grad_out)


class DownStage(ConvStage):
    """
    2 x 2 max pooling followed by a 3 x 3 convolution and a ReLU, changing
    the number of channels from `in_c` to `out_c`.

    """

    def __init__(self, in_c, out_c, rng, dtype, name):
        Module.__init__(self)
        self.name = name
        self.add_child('pool', MaxPool2())
        self.add_child('conv', Conv2D(in_c, out_c, 3, rng, dtype))
        self.add_child('relu', ReLU())


class UpStage(ConvStage):
    """
    2 x 2 nearest-neighbor upsampling followed by a 3 x 3 convolution and a
    ReLU, changing the number of channels from `in_c` to `out_c`.

    """

    def __init__(self, in_c, out_c, rng, dtype, name):
        Module.__init__(self)
        self.name = name
        self.add_child('up', Upsample2())
        self.add_child('conv', Conv2D(in_c, out_c, 3, rng, dtype))
        self.add_child('relu', ReLU())


class SharedResidualBlock(Module):
    """
    Residual block whose two 3 x 3 convolutions use one and the same kernel
    tensor::

        y1 = relu(bn1(conv(x, w)))
        y2 = relu(bn2(conv(dropout(y1), w)))
        out = x + y2

    The block owns exactly one kernel of shape (channels, channels, 3, 3) and
    no convolution bias. Its gradient is the sum of the contributions of both
    convolution sites, which are kept in :attr:`~site_grads` after every
    backward pass.

    """

    def __init__(self, channels, dropout, rng, drop_rng, dtype=np.float32,
                 name='block'):
        super().__init__()
        self.name = name
        self.channels = channels
        self.add_param('weight', he_normal((channels, channels, 3, 3), rng,
                                           dtype))
        self.bn1 = self.add_child('bn1', BatchNorm(channels, dtype))
        self.bn2 = self.add_child('bn2', BatchNorm(channels, dtype))
        self.drop = self.add_child('drop', Dropout(dropout, drop_rng))
        self.site_grads = None

    def forward(self, x):
        # Check channels
        if(x.ndim != 4 or x.shape[1] != self.channels):
            raise_error("Block %r over %i channels got input of shape %s!"
                        % (self.name, self.channels, x.shape),
                        ChannelMismatch, logger)

        # First convolution site
        w = self.params['weight']
        c1, self._conv1 = F.conv_forward(x, w)
        y1, self._relu1 = F.relu_forward(
            checked(self.name+'.bn1', self.bn1, c1))

        # Second convolution site, with the same kernel
        c2, self._conv2 = F.conv_forward(self.drop.forward(y1), w)
        y2, self._relu2 = F.relu_forward(
            checked(self.name+'.bn2', self.bn2, c2))

        # Residual sum
        return(x+y2)

    def backward(self, grad_out):
        # Second convolution site
        grad = self.bn2.backward(F.relu_backward(grad_out, self._relu2))
        grad, grad_w2, _ = F.conv_backward(grad, self._conv2)
        grad = self.drop.backward(grad)

        # First convolution site
        grad = self.bn1.backward(F.relu_backward(grad, self._relu1))
        grad_x, grad_w1, _ = F.conv_backward(grad, self._conv1)

        # Sum the contributions of both sites on the shared kernel
        self.site_grads = (grad_w1, grad_w2)
        self.grads['weight'] += grad_w1+grad_w2
        self._conv1 = self._conv2 = None

        # Residual path passes the gradient through
        return(grad_out+grad_x)

