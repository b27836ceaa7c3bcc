# -*- coding: utf-8 -*-

"""
vesselfcn
=========
Retinal vessel segmentation with fully convolutional networks.

"""


# %% IMPORTS
# vesselfcn imports
from .__version__ import __version__
from . import image_io
from .image_io import *
from . import preprocess
from .preprocess import *
from . import patches
from .patches import *
from . import nn
from . import train
from .train import *
from . import infer
from .infer import *
from . import evaluation
from .evaluation import *
from . import synth
from .synth import *
from . import dataset
from .dataset import *
from . import config
from .config import *

# All declaration
__all__ = ['config', 'dataset', 'evaluation', 'image_io', 'infer', 'nn',
           'patches', 'preprocess', 'synth', 'train']
__all__.extend(image_io.__all__)
__all__.extend(preprocess.__all__)
__all__.extend(patches.__all__)
__all__.extend(train.__all__)
__all__.extend(infer.__all__)
__all__.extend(evaluation.__all__)
__all__.extend(synth.__all__)
__all__.extend(dataset.__all__)
__all__.extend(config.__all__)
