# -*- coding: utf-8 -*-

"""
Configuration
=============
Provides the :class:`~RunConfig` class, the merged configuration of all
pipeline stages.

Configuration files hold ``key = value`` lines with dotted keys namespaced
by stage (``clahe.clip_limit = 2.0``); everything after a '#' is a comment.
The same dotted keys are accepted as command-line flags. Every value is
validated by the configuration class of the stage that owns it.

"""


# %% IMPORTS
# Built-in imports
from collections import OrderedDict

# vesselfcn imports
from vesselfcn._internal import (
    InvalidConfigValue, IoFailure, UnknownConfigKey, get_logger, raise_error)
from vesselfcn.infer import InferConfig
from vesselfcn.preprocess import ClaheParams
from vesselfcn.synth import SynthConfig
from vesselfcn.train import TrainConfig

# All declaration
__all__ = ['RunConfig']

# Initialize logger
logger = get_logger(__name__)

# Value used for keys whose default depends on the model
AUTO = 'auto'


# %% VALUE PARSERS
def _parse_bool(value):
    lowered = value.lower()
    if lowered in ('1', 'true', 'yes', 'on'):
        return(True)
    elif lowered in ('0', 'false', 'no', 'off'):
        return(False)
    raise ValueError(value)


def _parse_auto_int(value):
    return(None if(value.lower() in (AUTO, 'none')) else int(value))


def _parse_int_list(value):
    return([int(item) for item in value.split(',') if item.strip()])


def _choice(*options):
    def parse(value):
        if value not in options:
            raise ValueError(value)
        return(value)
    return(parse)


# Every key with its parser and default value
SCHEMA = OrderedDict([
    ('clahe.tiles_x', (int, 8)),
    ('clahe.tiles_y', (int, 8)),
    ('clahe.clip_limit', (float, 2.0)),
    ('clahe.bins', (int, 256)),
    ('preprocess.gamma', (float, 1.2)),
    ('model.name', (_choice('unet', 'laddernet'), 'unet')),
    ('model.base_channels', (int, 32)),
    ('model.depth', (int, 3)),
    ('model.dropout', (float, 0.2)),
    ('model.branch_pairs', (int, 2)),
    ('model.seed', (int, 0)),
    ('train.epochs', (_parse_auto_int, None)),
    ('train.batch_size', (_parse_auto_int, None)),
    ('train.lr', (float, 1e-3)),
    ('train.seed', (int, 42)),
    ('train.patches_per_image', (int, 2000)),
    ('train.patch_size', (int, 48)),
    ('train.val_fraction', (float, 0.1)),
    ('train.augment', (_parse_bool, True)),
    ('infer.mode', (_choice('stride', 'nonoverlap'), 'stride')),
    ('infer.stride', (int, 5)),
    ('infer.batch_size', (int, 256)),
    ('infer.threshold', (float, 0.5)),
    ('synth.count', (int, 12)),
    ('synth.size', (int, 128)),
    ('synth.vessels_min', (int, 3)),
    ('synth.vessels_max', (int, 6)),
    ('synth.width_min', (float, 1.0)),
    ('synth.width_max', (float, 4.0)),
    ('synth.noise_sigma', (float, 8.0)),
    ('synth.fov_radius', (float, 0.45)),
    ('synth.seed', (int, 0)),
    ('synth.test_count', (int, 4)),
    ('eval.k', (int, 5)),
    ('eval.seed', (int, 42)),
    ('eval.strides', (_parse_int_list, [48, 20, 10, 5])),
    ])


# %% RUNCONFIG CLASS DEFINITION
class RunConfig(object):
    """
    Merged configuration of all pipeline stages.

    Optional
    --------
    values : dict or None. Default: None
        Values to override the defaults with. String values are parsed.

    """

    def __init__(self, values=None):
        self._values = OrderedDict(
            (key, default) for key, (_, default) in SCHEMA.items())
        if values:
            self.update(values)

    # %% CLASS CONSTRUCTORS
    @classmethod
    def from_file(cls, filename, overrides=None):
        """
        Reads the configuration file `filename` and applies `overrides` on
        top of it.

        """

        config = cls()
        try:
            with open(filename, 'r') as f:
                lines = f.readlines()
        except OSError as error:
            raise_error("Cannot read config file %r: %s" % (filename, error),
                        IoFailure, logger)

        # Parse all key-value lines
        for n, line in enumerate(lines, 1):
            line = line.split('#', 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition('=')
            if not sep:
                raise_error("Line %i of config file %r is not 'key = value'!"
                            % (n, filename), InvalidConfigValue, logger)
            config[key.strip()] = value.strip()

        # Apply overrides
        if overrides:
            config.update(overrides)
        return(config)

    # %% DUNDER METHODS
    def __getitem__(self, key):
        self._check_key(key)
        return(self._values[key])

    def __setitem__(self, key, value):
        self._check_key(key)
        if isinstance(value, str):
            try:
                value = SCHEMA[key][0](value.strip())
            except ValueError:
                raise_error("Invalid value %r for config key %r!"
                            % (value, key), InvalidConfigValue, logger)
        self._values[key] = value

    def __iter__(self):
        return(iter(self._values))

    # %% GENERAL CLASS METHODS
    def update(self, values):
        for key, value in dict(values).items():
            self[key] = value

    def _check_key(self, key):
        if key not in SCHEMA:
            raise_error("Unknown config key %r!" % (key), UnknownConfigKey,
                        logger)

    def section(self, name):
        """
        Returns the values of all keys in section `name` as a dict of
        keyword arguments.

        """

        prefix = name+'.'
        return(OrderedDict((key[len(prefix):], value)
                           for key, value in self._values.items()
                           if key.startswith(prefix)))

    def clahe_params(self):
        return(ClaheParams(**self.section('clahe')))

    @property
    def gamma(self):
        return(self['preprocess.gamma'])

    def model_kwargs(self):
        """
        Returns the keyword arguments of
        :func:`~vesselfcn.nn.models.build_model`.

        """

        return(self.section('model'))

    def train_config(self):
        return(TrainConfig(model=self['model.name'],
                           **self.section('train')))

    def infer_config(self):
        return(InferConfig(patch_size=self['train.patch_size'],
                           **self.section('infer')))

    def synth_config(self):
        return(SynthConfig(**self.section('synth')))

    def validate(self):
        """
        Builds the configuration of every stage, raising the error of the
        first invalid value.

        """

        self.clahe_params()
        self.train_config()
        self.infer_config()
        self.synth_config()
        if(self.gamma <= 0):
            raise_error("Config key 'preprocess.gamma' must be positive, not "
                        "%r!" % (self.gamma), InvalidConfigValue, logger)
        if(self['eval.k'] < 2):
            raise_error("Config key 'eval.k' must be at least 2, not %r!"
                        % (self['eval.k']), InvalidConfigValue, logger)
        strides = self['eval.strides']
        if not strides or min(strides) < 1:
            raise_error("Config key 'eval.strides' must list positive "
                        "strides, not %r!" % (strides), InvalidConfigValue,
                        logger)
        return(self)

    def to_text(self):
        """
        Renders the effective configuration as ``key = value`` lines, with
        model-dependent defaults resolved.

        """

        values = OrderedDict(self._values)
        train = self.train_config()
        values['train.epochs'] = train.epochs
        values['train.batch_size'] = train.batch_size
        lines = []
        for key, value in values.items():
            if isinstance(value, list):
                value = ','.join(map(str, value))
            elif isinstance(value, bool):
                value = str(value).lower()
            lines.append("%s = %s" % (key, value))
        return("\n".join(lines)+"\n")

    def write(self, filename):
        try:
            with open(filename, 'w') as f:
                f.write(self.to_text())
        except OSError as error:
            raise_error("Cannot write config file %r: %s" % (filename, error),
                        IoFailure, logger)
