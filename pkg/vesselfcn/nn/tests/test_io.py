# -*- coding: utf-8 -*-

# %% IMPORTS
# Built-in imports
from collections import OrderedDict
from os import path
import struct

# Package imports
import numpy as np
import pytest

# vesselfcn imports
from vesselfcn._internal import (
    BadMagic, ShapeMismatch, TruncatedData, VersionMismatch)
from vesselfcn.nn.io import (
    HYPER_NAME, load_weights, read_tensors, save_weights, write_tensors)
from vesselfcn.nn.models import LadderNet, UNet, build_laddernet, build_unet


# %% PYTEST CLASSES AND FUNCTIONS
# Pytest for the raw tensor format
class Test_tensors(object):
    tensors = OrderedDict([('a', np.arange(6, dtype=np.float32).reshape(2, 3)),
                           ('b.c', np.array([1.5], dtype=np.float32))])

    def test_layout(self, tmpdir):
        filename = path.join(tmpdir.strpath, 'w.fcnw')
        write_tensors(self.tensors, filename)
        with open(filename, 'rb') as f:
            raw = f.read()
        assert raw[:4] == b'FCNW'
        assert struct.unpack_from('<II', raw, 4) == (1, 2)
        assert struct.unpack_from('<H', raw, 12) == (1,)
        assert raw[14:15] == b'a'
        assert struct.unpack_from('<B2I', raw, 15) == (2, 2, 3)

    def test_read(self, tmpdir):
        filename = path.join(tmpdir.strpath, 'w.fcnw')
        write_tensors(self.tensors, filename)
        tensors = read_tensors(filename)
        assert list(tensors) == ['a', 'b.c']
        assert tensors['a'].dtype == np.float32
        assert np.array_equal(tensors['a'], self.tensors['a'])

    def test_bad_magic(self, tmpdir):
        filename = path.join(tmpdir.strpath, 'w.fcnw')
        with open(filename, 'wb') as f:
            f.write(b'NOPE'+struct.pack('<II', 1, 0))
        with pytest.raises(BadMagic):
            read_tensors(filename)

    def test_version(self, tmpdir):
        filename = path.join(tmpdir.strpath, 'w.fcnw')
        with open(filename, 'wb') as f:
            f.write(b'FCNW'+struct.pack('<II', 2, 0))
        with pytest.raises(VersionMismatch):
            read_tensors(filename)

    @pytest.mark.parametrize('cut', [6, 13, 20, -1])
    def test_truncated(self, tmpdir, cut):
        filename = path.join(tmpdir.strpath, 'w.fcnw')
        write_tensors(self.tensors, filename)
        with open(filename, 'rb') as f:
            raw = f.read()
        with open(filename, 'wb') as f:
            f.write(raw[:cut])
        with pytest.raises(TruncatedData):
            read_tensors(filename)


# Pytest for saving and loading models
class Test_weights(object):
    def test_unet(self, tmpdir):
        filename = path.join(tmpdir.strpath, 'unet.fcnw')
        model = build_unet(2, 2, 0.1, seed=5)
        save_weights(model, filename)
        assert HYPER_NAME in read_tensors(filename)
        loaded = load_weights(filename)
        assert isinstance(loaded, UNet)
        assert not loaded.training
        assert loaded.hyper == model.hyper
        state = model.state_arrays()
        assert all(np.array_equal(value, state[name])
                   for name, value in loaded.state_arrays().items())

    def test_laddernet_into_model(self, tmpdir):
        filename = path.join(tmpdir.strpath, 'ladder.fcnw')
        model = build_laddernet(2, 2, 1, seed=1)
        model.blocks[0].bn1.buffers['running_mean'][...] = 0.25
        save_weights(model, filename)
        target = build_laddernet(2, 2, 1, seed=2)
        load_weights(filename, target)
        bn1 = target.blocks[0].bn1
        assert np.array_equal(bn1.buffers['running_mean'], [0.25, 0.25])
        assert isinstance(load_weights(filename), LadderNet)

    def test_predictions_preserved(self, tmpdir):
        filename = path.join(tmpdir.strpath, 'unet.fcnw')
        model = build_unet(2, 2, seed=0).eval()
        x = np.random.default_rng(0).random((2, 1, 8, 8))
        save_weights(model, filename)
        assert np.array_equal(load_weights(filename).predict_proba(x),
                              model.predict_proba(x))

    def test_shape_mismatch(self, tmpdir):
        filename = path.join(tmpdir.strpath, 'unet.fcnw')
        save_weights(build_unet(2, 2), filename)
        with pytest.raises(ShapeMismatch):
            load_weights(filename, build_unet(4, 2))
        with pytest.raises(ShapeMismatch):
            load_weights(filename, build_laddernet(2, 2, 1))
