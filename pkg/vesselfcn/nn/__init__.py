# -*- coding: utf-8 -*-

"""
NN
==
Minimal convolutional network engine with explicit forward and backward
passes, the Adam optimizer, the U-Net and LadderNet architectures and their
weights files.

"""


# %% IMPORTS
# vesselfcn.nn imports
from . import functional
from . import layers
from .layers import *
from . import blocks
from .blocks import *
from . import models
from .models import *
from . import optim
from .optim import *
from . import io
from .io import *
from . import gradcheck
from .gradcheck import *

# All declaration
__all__ = ['blocks', 'functional', 'gradcheck', 'io', 'layers', 'models',
           'optim']
__all__.extend(layers.__all__)
__all__.extend(blocks.__all__)
__all__.extend(models.__all__)
__all__.extend(optim.__all__)
__all__.extend(io.__all__)
__all__.extend(gradcheck.__all__)
