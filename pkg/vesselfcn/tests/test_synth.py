# -*- coding: utf-8 -*-

# %% IMPORTS
# Package imports
import numpy as np
import pytest

# vesselfcn imports
from vesselfcn._internal import InvalidConfigValue
from vesselfcn.image_io import BinaryMask, RgbImage
from vesselfcn.preprocess import rgb_to_gray
from vesselfcn.synth import SynthConfig, generate, synth_ids


# %% PYTEST CLASSES AND FUNCTIONS
# Pytest for the generator configuration
class Test_SynthConfig(object):
    def test_defaults(self):
        cfg = SynthConfig()
        assert (cfg.count, cfg.size, cfg.test_count) == (12, 128, 4)

    @pytest.mark.parametrize('kwargs', [
        {'count': 0}, {'size': 12}, {'size': 30}, {'vessels_min': 0},
        {'vessels_min': 9}, {'width_min': 0}, {'width_max': 0.5},
        {'fov_radius': 0.6}, {'noise_sigma': -1}, {'test_count': 12}])
    def test_invalid(self, kwargs):
        with pytest.raises(InvalidConfigValue):
            SynthConfig(**kwargs)


# Pytest for the synthetic images
class Test_generate(object):
    cfg = SynthConfig(count=3, size=64, seed=7, test_count=1)
    triples = generate(cfg)

    def test_types(self):
        assert len(self.triples) == 3
        for img, gt, fov in self.triples:
            assert isinstance(img, RgbImage)
            assert isinstance(gt, BinaryMask) and isinstance(fov, BinaryMask)
            assert img.data.shape == (64, 64, 3)
            assert gt.data.shape == fov.data.shape == (64, 64)

    def test_deterministic(self):
        for a, b in zip(self.triples, generate(self.cfg)):
            for x, y in zip(a, b):
                assert np.array_equal(x.data, y.data)

    def test_seeds_differ(self):
        other = generate(SynthConfig(count=1, size=64, seed=8,
                                     test_count=0))
        assert not np.array_equal(other[0][1].data, self.triples[0][1].data)

    def test_vessels_inside_fov(self):
        for _, gt, fov in self.triples:
            assert not (gt.data & (1-fov.data)).any()

    def test_centered_fov(self):
        fov = self.triples[0][2].data
        assert fov[32, 32] and not fov[0, 0]
        assert np.array_equal(fov, fov[::-1, ::-1])

    def test_vessels_darker(self):
        for img, gt, fov in self.triples:
            gray = rgb_to_gray(img).data
            vessel = gray[gt.data == 1]
            back = gray[(fov.data == 1) & (gt.data == 0)]
            assert back.mean()-vessel.mean() > self.cfg.noise_sigma

    def test_outside_fov_black(self):
        for img, _, fov in self.triples:
            assert not img.data[fov.data == 0].any()

    def test_vessel_fraction(self):
        fractions = []
        for seed in range(10):
            cfg = SynthConfig(count=1, seed=seed, test_count=0)
            _, gt, fov = generate(cfg)[0]
            fractions.append(gt.data.sum()/fov.data.sum())
        assert 0.02 <= np.mean(fractions) <= 0.2


# Pytest for the synthetic ids
def test_synth_ids():
    ids, test_ids = synth_ids(SynthConfig(count=5, test_count=2))
    assert ids == ['synth_000', 'synth_001', 'synth_002', 'synth_003',
                   'synth_004']
    assert test_ids == ['synth_003', 'synth_004']
    assert synth_ids(SynthConfig(count=3, test_count=0))[1] == []
