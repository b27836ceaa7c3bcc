# -*- coding: utf-8 -*-

"""
CLI
===
Provides the ``vesselfcn`` command-line interface, tying the pipeline stages
together::

    vesselfcn [--log-level LEVEL] COMMAND [ARGS] [--config FILE]
              [--section.key VALUE ...]

Every command accepts a configuration file and overrides of its keys in
dotted form (``--clahe.clip_limit 3`` or ``--clahe.clip_limit=3``), and
writes the effective configuration to ``effective_config.txt`` in its output
directory. The exit code is 0 on success, 1 on usage errors, 2 on data errors
and 3 on numeric aborts.

"""


# %% IMPORTS
# Built-in imports
import argparse
import logging
import os
from os import path
import sys

# vesselfcn imports
from vesselfcn import _mpi
from vesselfcn.__version__ import __version__
from vesselfcn._internal import (
    DimMismatch, IoFailure, UsageError, VesselFCNError, get_logger,
    raise_error, rprint)
from vesselfcn.config import RunConfig
from vesselfcn.dataset import load_dataset, read_strata, write_dataset
from vesselfcn.evaluation import (
    crossval, evaluate_maps, holdout, kfold_splits, plot_curves,
    stride_study, write_curve_csv, write_metrics_csv, write_stride_csv)
from vesselfcn.image_io import (
    PROB_MAXVAL, BinaryMask, GrayImage, ProbMap, read_pgm, read_ppm,
    write_mask, write_pgm, write_prob_map)
from vesselfcn.infer import binarize, predict_timed
from vesselfcn.nn.io import load_weights
from vesselfcn.nn.models import build_model
from vesselfcn.preprocess import preprocess_pipeline, read_stats, write_stats
from vesselfcn.synth import generate, synth_ids
from vesselfcn.train import build_training_set, split_train_val, train

# All declaration
__all__ = ['main']

# Initialize logger
logger = get_logger(__name__)

# Output file names
CONFIG_NAME = 'effective_config.txt'
STATS_NAME = 'stats.txt'


# %% ARGUMENT PARSING
# Argument parser raising usage errors instead of exiting
class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise_error("%s: %s" % (self.prog, message), UsageError, logger)


def make_parser():
    """
    Returns the argument parser of the ``vesselfcn`` command.

    """

    parser = _Parser(prog='vesselfcn', description="Retinal vessel "
                     "segmentation with fully convolutional networks.")
    parser.add_argument('--version', action='version',
                        version="vesselfcn %s" % (__version__))
    parser.add_argument('--log-level', default='WARNING',
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
                        help="verbosity of the log messages")
    commands = parser.add_subparsers(dest='command', metavar='COMMAND',
                                     parser_class=_Parser)
    commands.required = True

    def add(name, help_text, *positionals):
        cmd = commands.add_parser(name, help=help_text)
        for arg in positionals:
            cmd.add_argument(arg)
        cmd.add_argument('--config', help="configuration file")
        return(cmd)

    # Commands
    cmd = add('preprocess', "preprocess all images of a dataset", 'dataset',
              'out')
    cmd.add_argument('--stats', help="use these statistics instead of "
                     "computing them")
    add('train', "train a model on a dataset", 'dataset', 'out')
    cmd = add('predict', "predict vessel maps of images", 'checkpoint',
              'out')
    cmd.add_argument('images', nargs='+', help="PPM images to predict")
    cmd.add_argument('--stats', help="statistics file of the training set "
                     "(default: next to the checkpoint)")
    cmd = add('evaluate', "evaluate predicted vessel maps", 'pred_dir',
              'gt_dir', 'fov_dir', 'out')
    cmd.add_argument('--plot', action='store_true',
                     help="also plot the ROC and PR curves")
    cmd = add('crossval', "run stratified k-fold cross-validation",
              'dataset', 'out')
    cmd.add_argument('--strata', help="strata file (default: the strata "
                     "file of the dataset)")
    cmd.add_argument('--k', type=int, help="number of folds")
    add('synth', "generate a synthetic dataset", 'out')
    cmd = add('holdout', "train and evaluate on a predefined split",
              'dataset', 'out')
    cmd.add_argument('--plot', action='store_true',
                     help="also plot the ROC and PR curves")
    cmd = add('stride-study', "compare inference strides", 'checkpoint',
              'dataset', 'out')
    cmd.add_argument('--stats', help="statistics file of the training set "
                     "(default: next to the checkpoint)")
    return(parser)


# Splits dotted config overrides from the remaining arguments
def _split_overrides(args):
    overrides = {}
    rest = []
    i = 0
    while(i < len(args)):
        arg = args[i]
        name = arg[2:].partition('=')[0]
        if(arg.startswith('--') and '.' in name):
            if '=' in arg:
                overrides[name] = arg.partition('=')[2]
            elif(i+1 < len(args)):
                overrides[name] = args[i+1]
                i += 1
            else:
                raise_error("Config flag %r lacks a value!" % (arg),
                            UsageError, logger)
        else:
            rest.append(arg)
        i += 1
    return(overrides, rest)


# %% COMMAND FUNCTIONS
def cmd_preprocess(args, config):
    dataset = load_dataset(args.dataset)
    stats = read_stats(args.stats) if args.stats else None
    processed, stats = preprocess_pipeline(
        dataset.images, config.clahe_params(), config.gamma, stats)
    if _is_controller():
        for image_id, img in zip(dataset.ids, processed):
            write_pgm(GrayImage(img.data*255), path.join(args.out,
                                                         image_id+'.pgm'))
        write_stats(stats, path.join(args.out, STATS_NAME))
    rprint("Preprocessed %i images into %r." % (len(processed), args.out))


def cmd_train(args, config):
    dataset = load_dataset(args.dataset)
    if dataset.test_ids:
        dataset, _ = dataset.split()
    train_cfg = config.train_config()

    # Preprocess and cut patches
    images, stats = preprocess_pipeline(
        dataset.images, config.clahe_params(), config.gamma)
    patches = build_training_set(images, dataset.labels, train_cfg)
    train_set, val_set = split_train_val(patches, train_cfg.val_fraction,
                                         train_cfg.seed)

    # Train
    out = args.out if _is_controller() else None
    if out is not None:
        write_stats(stats, path.join(out, STATS_NAME))
    model = build_model(**config.model_kwargs())
    _, history = train(model, train_set, val_set, train_cfg, out)
    rprint("Trained %s for %i epochs; best epoch %s."
           % (model.name, len(history), history.best_epoch))


def cmd_predict(args, config):
    infer_cfg = config.infer_config()
    model = _load_model(args.checkpoint)
    stats = read_stats(_stats_file(args.stats, args.checkpoint))

    # Predict every image
    for filename in args.images:
        image_id = path.splitext(path.basename(filename))[0]
        (img,), _ = preprocess_pipeline([read_ppm(filename)],
                                        config.clahe_params(), config.gamma,
                                        stats)
        prob_map, seconds = predict_timed(model, img, infer_cfg)
        if _is_controller():
            write_prob_map(prob_map, path.join(args.out,
                                               image_id+'_prob.pgm'))
            write_mask(binarize(prob_map, infer_cfg.threshold),
                       path.join(args.out, image_id+'_mask.pgm'))
        rprint("%s: %.3f s" % (image_id, seconds))


def cmd_evaluate(args, config):
    # Collect the predictions
    suffix = '_prob.pgm'
    names = sorted(name for name in _list_dir(args.pred_dir)
                   if name.endswith(suffix))
    if not names:
        raise_error("Directory %r holds no '*%s' predictions!"
                    % (args.pred_dir, suffix), IoFailure, logger)

    # Read predictions with their ground truths and FOV masks
    ids, prob_maps, gts, fovs = [], [], [], []
    for name in names:
        image_id = name[:-len(suffix)]
        prob_map = _read_prediction(path.join(args.pred_dir, name))
        gt = _read_mask(path.join(args.gt_dir, image_id+'.pgm'))
        fov = _read_mask(path.join(args.fov_dir, image_id+'.pgm'))
        if not(prob_map.data.shape == gt.data.shape == fov.data.shape):
            raise_error("Prediction %r does not match the dimensions of its "
                        "ground truth or FOV mask!" % (name), DimMismatch,
                        logger)
        ids.append(image_id)
        prob_maps.append(prob_map)
        gts.append(gt)
        fovs.append(fov)

    # Evaluate
    rows, roc, pr = evaluate_maps(ids, prob_maps, gts, fovs,
                                  config['infer.threshold'])
    _write_results(args.out, rows, roc, pr, args.plot)


def cmd_crossval(args, config):
    dataset = load_dataset(args.dataset)
    if args.strata:
        dataset.strata = read_strata(args.strata)
    folds = kfold_splits(dataset.ids, dataset.strata, config['eval.k'],
                         config['eval.seed'])
    rows = crossval(dataset, config, folds)
    if _is_controller():
        write_metrics_csv(rows, path.join(args.out, 'crossval.csv'))
    _print_rows(rows)


def cmd_synth(args, config):
    synth_cfg = config.synth_config()
    triples = generate(synth_cfg)
    ids, test_ids = synth_ids(synth_cfg)
    if _is_controller():
        write_dataset(args.out, ids, triples, test_ids=test_ids)
    rprint("Wrote %i synthetic images to %r." % (len(ids), args.out))


def cmd_holdout(args, config):
    dataset = load_dataset(args.dataset)
    out = args.out if _is_controller() else None
    rows, roc, pr, _ = holdout(dataset, config, out)
    _write_results(args.out, rows, roc, pr, args.plot)


def cmd_stride_study(args, config):
    model = _load_model(args.checkpoint)
    stats = read_stats(_stats_file(args.stats, args.checkpoint))
    dataset = load_dataset(args.dataset)
    if dataset.test_ids:
        _, dataset = dataset.split()
    images, _ = preprocess_pipeline(dataset.images, config.clahe_params(),
                                    config.gamma, stats)
    rows = stride_study(model, images, dataset.labels, dataset.fovs,
                        config['eval.strides'], config.infer_config())
    if _is_controller():
        write_stride_csv(rows, path.join(args.out, 'stride_study.csv'))


COMMANDS = {
    'preprocess': cmd_preprocess,
    'train': cmd_train,
    'predict': cmd_predict,
    'evaluate': cmd_evaluate,
    'crossval': cmd_crossval,
    'synth': cmd_synth,
    'holdout': cmd_holdout,
    'stride-study': cmd_stride_study,
    }


# %% MAIN FUNCTION
def main(argv=None):
    """
    Runs the ``vesselfcn`` command with the arguments `argv` (default: the
    arguments of the process) and returns its exit code.

    """

    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        # Parse arguments
        overrides, rest = _split_overrides(argv)
        args = make_parser().parse_args(rest)
        _configure_logging(args.log_level)
        if getattr(args, 'k', None) is not None:
            overrides['eval.k'] = str(args.k)

        # Assemble configuration
        if args.config:
            config = RunConfig.from_file(args.config, overrides)
        else:
            config = RunConfig(overrides)
        config.validate()

        # Prepare the output directory and run the command
        if _is_controller():
            _make_dir(args.out)
            config.write(path.join(args.out, CONFIG_NAME))
        COMMANDS[args.command](args, config)
    except VesselFCNError as error:
        print("vesselfcn: error: %s" % (error), file=sys.stderr)
        return(error.exit_code)
    return(0)


# %% HELPER FUNCTIONS
# Configures the vesselfcn root logger once
def _configure_logging(level):
    root = logging.getLogger('vesselfcn')
    root.setLevel(level)
    if not root.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(
            "%(asctime)s %(levelname)s %(name)s: %(message)s"))
        root.addHandler(handler)


# Returns whether this process writes the outputs
def _is_controller():
    return(not _mpi.rank)


# Loads a checkpoint, failing clearly if it is missing
def _load_model(checkpoint):
    if not path.isfile(checkpoint):
        raise_error("Checkpoint %r does not exist!" % (checkpoint), IoFailure,
                    logger)
    return(load_weights(checkpoint))


# Determines the statistics file of a checkpoint
def _stats_file(stats, checkpoint):
    return(stats or path.join(path.dirname(checkpoint), STATS_NAME))


# Reads a 16-bit probability map, accepting binary masks as hard predictions
def _read_prediction(filename):
    img = read_pgm(filename)
    if isinstance(img, BinaryMask):
        return(ProbMap(img.data.astype(float)))
    return(ProbMap(img.data/PROB_MAXVAL))


# Reads a file that must hold a binary mask
def _read_mask(filename):
    mask = read_pgm(filename)
    if not isinstance(mask, BinaryMask):
        raise_error("File %r is not a binary mask!" % (filename), IoFailure,
                    logger)
    return(mask)


# Lists a directory
def _list_dir(dirname):
    try:
        return(os.listdir(dirname))
    except OSError as error:
        raise_error("Cannot list %r: %s" % (dirname, error), IoFailure,
                    logger)


# Creates a directory and all of its parents
def _make_dir(dirname):
    try:
        os.makedirs(dirname, exist_ok=True)
    except OSError as error:
        raise_error("Cannot create directory %r: %s" % (dirname, error),
                    IoFailure, logger)


# Writes the metrics and curves of an evaluation
def _write_results(out, rows, roc, pr, plot):
    if _is_controller():
        write_metrics_csv(rows, path.join(out, 'metrics.csv'))
        write_curve_csv(roc, path.join(out, 'roc.csv'))
        write_curve_csv(pr, path.join(out, 'pr.csv'))
        if plot:
            plot_curves(roc, pr, path.join(out, 'curves.png'))
    _print_rows(rows)


# Prints result rows as a table
def _print_rows(rows):
    rprint("%-12s %8s %8s %8s %8s %8s"
           % ('image_id', 'acc', 'sn', 'sp', 'f1', 'auc'))
    for row in rows:
        m = row.metrics
        rprint("%-12s %s" % (row.image_id, ' '.join(
            '%8s' % ('-') if value is None else '%8.4f' % (value)
            for value in (m.acc, m.sn, m.sp, m.f1, m.auc))))
