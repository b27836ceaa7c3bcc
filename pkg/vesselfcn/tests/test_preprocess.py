# -*- coding: utf-8 -*-

# %% IMPORTS
# Built-in imports
from os import path

# Package imports
import numpy as np
import pytest

# vesselfcn imports
from vesselfcn._internal import (
    DegenerateDataset, DegenerateRange, InvalidConfigValue, InvalidGamma,
    MalformedHeader)
from vesselfcn.image_io import GrayImage, RgbImage
from vesselfcn.preprocess import (
    ClaheParams, DatasetStats, clahe, compute_stats, estimate_fov,
    gamma_adjust, preprocess_pipeline, read_stats, rgb_to_gray, standardize,
    tile_mapping, write_stats)
from vesselfcn.synth import SynthConfig, generate


# %% HELPER FUNCTIONS
# Plain histogram equalization of an 8-bit image
def equalize(levels):
    counts = np.bincount(levels.ravel(), minlength=256)
    cdf = np.cumsum(counts)
    cdf_min = cdf[levels.min()]
    n = levels.size
    mapping = [np.floor(255*(int(c)-int(cdf_min))/(n-int(cdf_min))+0.5)
               for c in cdf]
    return(np.array(mapping)[levels])


# %% PYTEST CLASSES AND FUNCTIONS
# Pytest for the grayscale conversion
def test_rgb_to_gray():
    img = RgbImage(np.array([[[255, 0, 0], [0, 255, 0], [0, 0, 255]]]))
    assert np.allclose(rgb_to_gray(img).data, [[76.245, 149.685, 29.07]])


# Pytest for the dataset statistics and standardization
class Test_standardize(object):
    images = [GrayImage(np.array([[0., 2.], [4., 6.]])),
              GrayImage(np.array([[8., 10.]]))]

    def test_stats(self):
        stats = compute_stats(self.images)
        values = np.array([0, 2, 4, 6, 8, 10])
        assert np.isclose(stats.mean, values.mean())
        assert np.isclose(stats.std, values.std())

    def test_extrema(self):
        stats = compute_stats(self.images)
        zmin = (0-stats.mean)/stats.std
        zmax = (10-stats.mean)/stats.std
        out = [standardize(img, stats, zmin, zmax).data for img in
               self.images]
        assert out[0][0, 0] == 0
        assert out[1][0, 1] == 1
        inner = np.concatenate([out[0].ravel()[1:], out[1].ravel()[:1]])
        assert ((inner > 0) & (inner < 1)).all()

    def test_clipping(self):
        stats = DatasetStats(5., 1.)
        out = standardize(GrayImage(np.array([[0., 5., 10.]])), stats, -1, 1)
        assert out.data.tolist() == [[0., 0.5, 1.]]

    def test_degenerate(self):
        with pytest.raises(DegenerateDataset):
            compute_stats([GrayImage(np.full((3, 3), 7.))])
        with pytest.raises(DegenerateDataset):
            compute_stats([])
        with pytest.raises(DegenerateRange):
            standardize(self.images[0], DatasetStats(1., 1.), 1, 1)

    def test_stats_file(self, tmpdir):
        filename = path.join(tmpdir.strpath, 'stats.txt')
        stats = DatasetStats(0.1, 0.2, -1.5, 3.25)
        write_stats(stats, filename)
        assert read_stats(filename) == stats
        with open(filename, 'w') as f:
            f.write("mean=1\nstd=2\n")
        with pytest.raises(MalformedHeader):
            read_stats(filename)


# Pytest for CLAHE
class Test_clahe(object):
    params = ClaheParams(tiles_x=1, tiles_y=1, clip_limit=0)

    def test_equalization_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            shape = tuple(rng.integers(4, 40, size=2))
            levels = rng.integers(rng.integers(0, 100), 256, size=shape)
            out = clahe(GrayImage(levels/255), self.params)
            assert np.array_equal(out.data, equalize(levels)/255)

    def test_two_values(self):
        levels = np.full((4, 4), 10)
        levels[0] = 200
        out = clahe(GrayImage(levels/255), self.params).data*255
        assert np.allclose(out[0], 255)
        assert np.allclose(out[1:], 0)

    @pytest.mark.parametrize('value', [0, 37, 255])
    def test_constant_fixed_point(self, value):
        img = GrayImage(np.full((20, 30), value/255))
        assert np.allclose(clahe(img, ClaheParams()).data, img.data,
                           rtol=0, atol=1e-12)

    def test_mappings_monotone(self):
        rng = np.random.default_rng(3)
        for clip_limit in (0, 1.0, 2.0, 4.0):
            tile = rng.integers(0, 256, size=(16, 16))
            assert (np.diff(tile_mapping(tile, clip_limit)) >= 0).all()

    def test_range_and_shape(self):
        img = GrayImage(np.random.default_rng(5).random((37, 53)))
        out = clahe(img, ClaheParams(8, 8, 2.0)).data
        assert out.shape == (37, 53)
        assert out.min() >= 0 and out.max() <= 1

    @pytest.mark.parametrize('kwargs', [
        {'tiles_x': 0}, {'clip_limit': -1.}, {'bins': 128}])
    def test_invalid_params(self, kwargs):
        with pytest.raises(InvalidConfigValue):
            ClaheParams(**kwargs)


# Pytest for the gamma adjustment
class Test_gamma_adjust(object):
    img = GrayImage(np.array([[0., 0.25, 0.5, 1.]]))

    def test_values(self):
        assert np.allclose(gamma_adjust(self.img, 2).data,
                           [[0, 0.5, np.sqrt(0.5), 1]])
        assert np.array_equal(gamma_adjust(self.img, 1).data, self.img.data)

    def test_brightens(self):
        out = gamma_adjust(self.img, 1.2).data
        assert (out[0, 1:3] > self.img.data[0, 1:3]).all()

    @pytest.mark.parametrize('gamma', [0, -1.])
    def test_invalid(self, gamma):
        with pytest.raises(InvalidGamma):
            gamma_adjust(self.img, gamma)


# Pytest for the full preprocessing chain
class Test_preprocess_pipeline(object):
    triples = generate(SynthConfig(count=2, size=32, seed=42, test_count=0))
    images = [rgb for rgb, _, _ in triples]

    def test_deterministic(self):
        out1, stats1 = preprocess_pipeline(self.images)
        out2, stats2 = preprocess_pipeline(self.images)
        assert stats1 == stats2
        for a, b in zip(out1, out2):
            assert a.data.tobytes() == b.data.tobytes()
            assert a.data.min() >= 0 and a.data.max() <= 1

    def test_reuses_stats(self):
        _, stats = preprocess_pipeline(self.images)
        out, used = preprocess_pipeline(self.images[:1], stats=stats)
        assert used is stats
        assert len(out) == 1

    def test_degenerate(self):
        gray = RgbImage(np.full((8, 8, 3), 128))
        with pytest.raises(DegenerateDataset):
            preprocess_pipeline([gray])


# Pytest for the FOV estimation
class Test_estimate_fov(object):
    def test_disc(self):
        yy, xx = np.mgrid[:64, :64]
        disc = (yy-31.5)**2+(xx-31.5)**2 <= 25**2
        data = np.zeros((64, 64, 3))
        data[disc] = (180, 90, 40)
        fov = estimate_fov(RgbImage(data))
        assert (fov.data.astype(bool) != disc).mean() < 0.01

    def test_constant(self):
        fov = estimate_fov(RgbImage(np.full((8, 8, 3), 50)))
        assert not fov.data.any()
