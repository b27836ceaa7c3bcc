# -*- coding: utf-8 -*-

# %% IMPORTS
# Package imports
import numpy as np
import pytest

# vesselfcn imports
from vesselfcn._internal import (
    InvalidConfigValue, NumericAbort, StrideExceedsPatch)
from vesselfcn.image_io import GrayImage, ProbMap
from vesselfcn.infer import InferConfig, binarize, predict_image, predict_timed
from vesselfcn.nn.models import build_unet


# %% CUSTOM CLASSES
# Model stub that predicts a fixed probability everywhere
class ConstantModel(object):
    def __init__(self, value):
        self.value = value
        self.n_patches = 0

    def eval(self):
        return(self)

    def predict_proba(self, x, batch_size=256):
        self.n_patches += len(x)
        return(np.full((len(x),)+x.shape[2:], self.value, dtype=np.float32))


# Model stub that copies its input patches
class EchoModel(ConstantModel):
    def predict_proba(self, x, batch_size=256):
        return(x[:, 0].astype(np.float32))


# %% PYTEST CLASSES AND FUNCTIONS
# Pytest for the inference configuration
class Test_InferConfig(object):
    def test_defaults(self):
        cfg = InferConfig()
        assert (cfg.mode, cfg.stride, cfg.batch_size) == ('stride', 5, 256)
        assert cfg.threshold == 0.5 and cfg.patch_size == 48
        assert cfg.effective_stride == 5

    def test_nonoverlap(self):
        assert InferConfig('nonoverlap').effective_stride == 48

    @pytest.mark.parametrize('stride', [0, 49])
    def test_stride(self, stride):
        with pytest.raises(StrideExceedsPatch):
            InferConfig(stride=stride)

    @pytest.mark.parametrize('kwargs', [
        {'mode': 'tiled'}, {'threshold': 1.0}, {'batch_size': 0}])
    def test_invalid(self, kwargs):
        with pytest.raises(InvalidConfigValue):
            InferConfig(**kwargs)


# Pytest for the full-image prediction
class Test_predict_image(object):
    img = GrayImage(np.random.default_rng(0).random((50, 61)))

    def test_constant_model(self):
        prob = predict_image(ConstantModel(0.25), self.img,
                             InferConfig(stride=10))
        assert isinstance(prob, ProbMap)
        assert prob.data.shape == (50, 61)
        assert np.allclose(prob.data, 0.25)

    def test_echo_model(self):
        img = GrayImage(self.img.data.astype(np.float32))
        for stride in (7, 48):
            prob = predict_image(EchoModel(0), img, InferConfig(stride=stride))
            assert np.array_equal(prob.data, img.data)

    def test_nonoverlap_mode(self):
        cfg = InferConfig('nonoverlap', batch_size=3)
        model = ConstantModel(0.5)
        predict_image(model, self.img, cfg)
        assert model.n_patches == 2*2
        a = predict_image(EchoModel(0), self.img, cfg)
        b = predict_image(EchoModel(0), self.img, InferConfig(stride=48))
        assert np.array_equal(a.data, b.data)

    def test_batching(self):
        model = build_unet(2, 2, seed=0)
        img = GrayImage(self.img.data[:20, :20])
        a = predict_image(model, img, InferConfig(stride=4, patch_size=8,
                                                  batch_size=7))
        b = predict_image(model, img, InferConfig(stride=4, patch_size=8,
                                                  batch_size=100))
        assert np.allclose(a.data, b.data, atol=1e-6)
        assert not model.training

    def test_non_finite(self):
        with pytest.raises(NumericAbort):
            predict_image(ConstantModel(np.nan), self.img,
                          InferConfig(stride=48))

    def test_timed(self):
        prob, seconds = predict_timed(ConstantModel(0.1), self.img,
                                      InferConfig(stride=24))
        assert np.allclose(prob.data, 0.1)
        assert seconds >= 0


# Pytest for the thresholding
def test_binarize():
    prob = ProbMap(np.array([[0.2, 0.5], [0.7, 0.49999]]))
    assert binarize(prob).data.tolist() == [[0, 1], [1, 0]]
    assert binarize(prob, 0.6).data.tolist() == [[0, 0], [1, 0]]
    assert binarize(ProbMap(np.full((2, 2), 0.5))).data.all()
