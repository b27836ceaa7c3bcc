# -*- coding: utf-8 -*-

# %% IMPORTS
# Built-in imports
from os import path

# Package imports
import numpy as np
import pytest

# vesselfcn imports
from vesselfcn._internal import (
    DataError, IoFailure, MalformedHeader, TruncatedData, UnsupportedMaxval)
from vesselfcn.image_io import (
    BinaryMask, GrayImage, ProbMap, RgbImage, read_pgm, read_ppm,
    read_prob_map, round_half_away, write_mask, write_pgm, write_ppm,
    write_prob_map)


# %% HELPER FUNCTIONS
def write_raw(tmpdir, name, raw):
    filename = path.join(tmpdir.strpath, name)
    with open(filename, 'wb') as f:
        f.write(raw)
    return(filename)


# %% PYTEST CLASSES AND FUNCTIONS
# Pytest for the image containers
class Test_containers(object):
    def test_rgb(self):
        img = RgbImage(np.zeros((2, 3, 3)))
        assert (img.height, img.width) == (2, 3)
        assert img.data.dtype == np.uint8
        with pytest.raises(DataError):
            RgbImage(np.zeros((2, 3)))

    def test_gray(self):
        assert GrayImage(np.ones((4, 5))).width == 5
        with pytest.raises(DataError):
            GrayImage(np.array([[np.nan]]))
        with pytest.raises(DataError):
            GrayImage(np.zeros((0, 3)))

    def test_mask(self):
        assert BinaryMask(np.array([[0, 1]])).data.dtype == np.uint8
        with pytest.raises(DataError):
            BinaryMask(np.array([[0, 2]]))

    def test_prob_map(self):
        assert ProbMap(np.array([[0., 0.5, 1.]])).height == 1
        with pytest.raises(DataError):
            ProbMap(np.array([[1.5]]))


# Pytest for rounding halves away from zero
def test_round_half_away():
    assert np.array_equal(round_half_away([0.5, 1.5, 2.5, -0.5, 0.49]),
                          [1, 2, 3, -1, 0])


# Pytest for reading and writing PPM files
class Test_ppm(object):
    def test_single_pixel(self, tmpdir):
        filename = write_raw(tmpdir, 'a.ppm', b'P6\n1 1\n255\n\xff\x00\x00')
        img = read_ppm(filename)
        assert img.data.tolist() == [[[255, 0, 0]]]

    def test_comments(self, tmpdir):
        raw = b'P6 # color\n# size next\n1 1\n255\n\x01\x02\x03'
        filename = write_raw(tmpdir, 'a.ppm', raw)
        assert read_ppm(filename).data.tolist() == [[[1, 2, 3]]]

    def test_truncated(self, tmpdir):
        filename = write_raw(tmpdir, 'a.ppm', b'P6\n2 2\n255\n'+bytes(9))
        with pytest.raises(TruncatedData):
            read_ppm(filename)

    def test_maxval(self, tmpdir):
        filename = write_raw(tmpdir, 'a.ppm', b'P6\n1 1\n65535\n'+bytes(6))
        with pytest.raises(UnsupportedMaxval):
            read_ppm(filename)

    def test_wrong_magic(self, tmpdir):
        filename = write_raw(tmpdir, 'a.ppm', b'P5\n1 1\n255\n\x00')
        with pytest.raises(MalformedHeader):
            read_ppm(filename)

    def test_bad_header(self, tmpdir):
        filename = write_raw(tmpdir, 'a.ppm', b'P6\n1 x\n255\n\x00')
        with pytest.raises(MalformedHeader):
            read_ppm(filename)

    def test_write_read(self, tmpdir):
        data = np.random.default_rng(0).integers(0, 256, (16, 16, 3))
        filename = path.join(tmpdir.strpath, 'b.ppm')
        write_ppm(RgbImage(data), filename)
        with open(filename, 'rb') as f:
            assert f.read(13) == b'P6\n16 16\n255\n'
        assert np.array_equal(read_ppm(filename).data, data)

    def test_missing(self, tmpdir):
        with pytest.raises(IoFailure):
            read_ppm(path.join(tmpdir.strpath, 'missing.ppm'))


# Pytest for reading and writing PGM files
class Test_pgm(object):
    def test_mask(self, tmpdir):
        filename = write_raw(tmpdir, 'm.pgm', b'P5\n2 1\n255\n\x00\xff')
        mask = read_pgm(filename)
        assert isinstance(mask, BinaryMask)
        assert mask.data.tolist() == [[0, 1]]

    def test_gray(self, tmpdir):
        filename = write_raw(tmpdir, 'g.pgm', b'P5\n2 1\n255\n\x00\x80')
        img = read_pgm(filename)
        assert isinstance(img, GrayImage)
        assert img.data.tolist() == [[0., 128.]]

    def test_16bit(self, tmpdir):
        filename = write_raw(tmpdir, 'g.pgm', b'P5\n1 1\n65535\n\xff\xff')
        img = read_pgm(filename)
        assert isinstance(img, GrayImage)
        assert img.data[0, 0] == 65535.0

    def test_maxval(self, tmpdir):
        filename = write_raw(tmpdir, 'g.pgm', b'P5\n1 1\n1023\n\x00\x00')
        with pytest.raises(UnsupportedMaxval):
            read_pgm(filename)

    def test_write_gray(self, tmpdir):
        filename = path.join(tmpdir.strpath, 'g.pgm')
        write_pgm(GrayImage(np.array([[0.4, 127.5, 300.]])), filename)
        assert read_pgm(filename).data.tolist() == [[0., 128., 255.]]

    def test_write_mask(self, tmpdir):
        filename = path.join(tmpdir.strpath, 'm.pgm')
        write_mask(BinaryMask(np.array([[1, 0], [0, 1]])), filename)
        with open(filename, 'rb') as f:
            assert f.read() == b'P5\n2 2\n255\n\xff\x00\x00\xff'


# Pytest for probability map files
class Test_prob_map(object):
    def test_precision(self, tmpdir):
        p = ProbMap(np.random.default_rng(1).random((7, 5)))
        filename = path.join(tmpdir.strpath, 'p.pgm')
        write_prob_map(p, filename)
        q = read_prob_map(filename)
        assert np.abs(q.data-p.data).max() <= 0.5/65535

    def test_endpoints(self, tmpdir):
        filename = path.join(tmpdir.strpath, 'p.pgm')
        write_prob_map(ProbMap(np.array([[0., 1.]])), filename)
        with open(filename, 'rb') as f:
            assert f.read() == b'P5\n2 1\n65535\n\x00\x00\xff\xff'

    def test_not_prob_map(self, tmpdir):
        filename = write_raw(tmpdir, 'm.pgm', b'P5\n1 1\n255\n\xff')
        with pytest.raises(UnsupportedMaxval):
            read_prob_map(filename)
