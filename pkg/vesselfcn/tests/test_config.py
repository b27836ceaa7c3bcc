# -*- coding: utf-8 -*-

# %% IMPORTS
# Built-in imports
from os import path

# Package imports
import pytest

# vesselfcn imports
from vesselfcn._internal import (
    InvalidConfigValue, IoFailure, StrideExceedsPatch, UnknownConfigKey)
from vesselfcn.config import RunConfig
from vesselfcn.infer import InferConfig
from vesselfcn.preprocess import ClaheParams
from vesselfcn.synth import SynthConfig
from vesselfcn.train import TrainConfig


# %% PYTEST CLASSES AND FUNCTIONS
# Pytest for the RunConfig class
class Test_RunConfig(object):
    def test_defaults(self):
        config = RunConfig().validate()
        assert config['clahe.clip_limit'] == 2.0
        assert config.gamma == 1.2
        assert config['eval.strides'] == [48, 20, 10, 5]
        assert config.clahe_params() == ClaheParams()
        assert config.infer_config() == InferConfig()
        assert config.synth_config() == SynthConfig()
        assert config.train_config() == TrainConfig('unet')

    def test_string_values(self):
        config = RunConfig({'train.augment': 'no', 'train.epochs': '3',
                            'eval.strides': '48, 5', 'infer.stride': ' 7 '})
        assert config['train.augment'] is False
        assert config['train.epochs'] == 3
        assert config['eval.strides'] == [48, 5]
        assert config['infer.stride'] == 7

    def test_model_dependent_defaults(self):
        config = RunConfig({'model.name': 'laddernet'})
        train = config.train_config()
        assert (train.model, train.epochs, train.batch_size) == (
            'laddernet', 4, 1024)
        assert config.model_kwargs()['name'] == 'laddernet'
        assert 'train.batch_size = 1024' in config.to_text()

    def test_infer_patch_size(self):
        config = RunConfig({'train.patch_size': '32', 'infer.stride': '32'})
        assert config.infer_config().patch_size == 32
        config['infer.stride'] = 33
        with pytest.raises(StrideExceedsPatch):
            config.validate()

    def test_unknown_key(self):
        with pytest.raises(UnknownConfigKey):
            RunConfig({'clahe.tiles': 4})
        with pytest.raises(UnknownConfigKey):
            RunConfig()['train.momentum']

    @pytest.mark.parametrize('key, value', [
        ('model.name', 'segnet'), ('train.augment', 'maybe'),
        ('train.lr', 'fast'), ('clahe.tiles_x', '2.5')])
    def test_unparsable(self, key, value):
        with pytest.raises(InvalidConfigValue):
            RunConfig({key: value})

    @pytest.mark.parametrize('key, value', [
        ('clahe.bins', 128), ('preprocess.gamma', 0.0), ('eval.k', 1),
        ('train.val_fraction', 1.5), ('synth.size', 30),
        ('eval.strides', [])])
    def test_invalid(self, key, value):
        with pytest.raises(InvalidConfigValue):
            RunConfig({key: value}).validate()

    @pytest.mark.parametrize('key, value', [
        ('preprocess.gamma', -1.0), ('eval.k', 0), ('eval.strides', []),
        ('eval.strides', [5, 0])])
    def test_invalid_names_key(self, key, value):
        with pytest.raises(InvalidConfigValue, match=key.replace('.', r'\.')):
            RunConfig({key: value}).validate()

    def test_section(self):
        section = RunConfig().section('clahe')
        assert list(section) == ['tiles_x', 'tiles_y', 'clip_limit', 'bins']


# Pytest for configuration files
class Test_config_files(object):
    def test_from_file(self, tmpdir):
        filename = path.join(tmpdir.strpath, 'run.cfg')
        with open(filename, 'w') as f:
            f.write("# Settings\nclahe.clip_limit = 3.5\n\n"
                    "model.name=laddernet  # smaller\n")
        config = RunConfig.from_file(filename, {'model.depth': '2'})
        assert config['clahe.clip_limit'] == 3.5
        assert config['model.name'] == 'laddernet'
        assert config['model.depth'] == 2

    def test_overrides_win(self, tmpdir):
        filename = path.join(tmpdir.strpath, 'run.cfg')
        with open(filename, 'w') as f:
            f.write("infer.stride = 10\n")
        config = RunConfig.from_file(filename, {'infer.stride': '20'})
        assert config['infer.stride'] == 20

    def test_write_and_read(self, tmpdir):
        filename = path.join(tmpdir.strpath, 'effective.cfg')
        config = RunConfig({'train.augment': False, 'eval.k': 4})
        config.write(filename)
        stored = RunConfig.from_file(filename)
        assert list(stored) == list(config)
        assert stored['train.augment'] is False
        assert stored['eval.k'] == 4
        assert stored['train.epochs'] == 10
        assert stored.to_text() == config.to_text()

    def test_bad_line(self, tmpdir):
        filename = path.join(tmpdir.strpath, 'run.cfg')
        with open(filename, 'w') as f:
            f.write("clahe.clip_limit 3\n")
        with pytest.raises(InvalidConfigValue):
            RunConfig.from_file(filename)

    def test_missing_file(self, tmpdir):
        with pytest.raises(IoFailure):
            RunConfig.from_file(path.join(tmpdir.strpath, 'missing.cfg'))
