# -*- coding: utf-8 -*-

"""
vesselfcn Version
=================
Stores the different versions of the *vesselfcn* package.

"""


# %% VERSIONS
# Default/Latest/Current version
__version__ = '0.1.0'
