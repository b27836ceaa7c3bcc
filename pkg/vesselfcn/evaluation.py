# -*- coding: utf-8 -*-

"""
Evaluation
==========
Provides the FOV-masked evaluation of vessel segmentations: confusion counts,
the scalar metrics derived from them, ROC and precision-recall curves and the
rank-based area under the ROC curve. On top of these, it provides the
stratified k-fold protocol and the cross-validation, predefined-split and
inference-stride experiments.

"""


# %% IMPORTS
# Built-in imports
import csv
from dataclasses import dataclass, fields

# Package imports
import numpy as np
from scipy.stats import rankdata

# vesselfcn imports
from vesselfcn import _mpi
from vesselfcn._internal import (
    BadK, DimMismatch, EmptyFov, IoFailure, SingleClass, get_logger,
    raise_error, raise_warning, rprint)
from vesselfcn.infer import InferConfig, binarize, predict_timed
from vesselfcn.nn.models import build_model
from vesselfcn.preprocess import preprocess_pipeline
from vesselfcn.train import build_training_set, split_train_val, train

# All declaration
__all__ = ['Confusion', 'Curve', 'FoldSpec', 'MetricsRow', 'ResultRow',
           'StrideRow', 'auc', 'confusion', 'crossval', 'curve_area',
           'evaluate_maps', 'fit_and_evaluate', 'holdout', 'kfold_splits',
           'mean_row', 'metrics', 'plot_curves', 'pr_curve', 'roc_curve',
           'stride_study', 'write_curve_csv', 'write_metrics_csv',
           'write_stride_csv']

# Initialize logger
logger = get_logger(__name__)

# CSV headers
METRICS_HEADER = ['image_id', 'TP', 'TN', 'FP', 'FN', 'acc', 'sn', 'sp',
                  'precision', 'recall', 'f1', 'auc']
CURVE_HEADER = ['threshold', 'x', 'y']
STRIDE_HEADER = ['stride', 'seconds', 'f1', 'sn', 'sp', 'acc', 'auc']


# %% CLASS DEFINITIONS
@dataclass(frozen=True)
class Confusion(object):
    """
    Pixel counts of a binary segmentation against its ground truth, with
    vessels as the positive class.

    """

    tp: int
    tn: int
    fp: int
    fn: int

    def __add__(self, other):
        return(Confusion(self.tp+other.tp, self.tn+other.tn,
                         self.fp+other.fp, self.fn+other.fn))

    @property
    def total(self):
        return(self.tp+self.tn+self.fp+self.fn)


@dataclass(frozen=True)
class MetricsRow(object):
    acc: float
    sn: float
    sp: float
    precision: float
    recall: float
    f1: float
    auc: float = None


@dataclass(frozen=True)
class ResultRow(object):
    """
    A labeled evaluation result: the confusion counts and metrics of a single
    image, of a pooled set of images or of a fold.

    """

    image_id: str
    confusion: Confusion
    metrics: MetricsRow


@dataclass(frozen=True)
class StrideRow(object):
    stride: int
    patch_size: int
    seconds: float
    metrics: MetricsRow

    @property
    def label(self):
        return('nonoverlap' if(self.stride == self.patch_size) else
               str(self.stride))


@dataclass(frozen=True)
class Curve(object):
    """
    A ROC curve (x = false positive rate, y = true positive rate) or a
    precision-recall curve (x = recall, y = precision). Points are ordered by
    descending `thresholds`; the first threshold is infinite.

    """

    kind: str
    thresholds: np.ndarray
    x: np.ndarray
    y: np.ndarray


@dataclass(frozen=True)
class FoldSpec(object):
    """
    A partition of image ids into `k` folds, stratified by `strata`.

    """

    k: int
    folds: tuple
    strata: dict

    def train_test(self, index):
        """
        Returns the (train, test) image ids of fold `index`: all ids of the
        other folds and the ids of the fold itself.

        """

        train_ids = [image_id for i, fold in enumerate(self.folds)
                     if i != index for image_id in fold]
        return(sorted(train_ids), list(self.folds[index]))


# %% METRIC FUNCTIONS
def confusion(pred, gt, fov):
    """
    Counts the true/false positives/negatives of the
    :obj:`~vesselfcn.image_io.BinaryMask` `pred` against `gt`, over the
    pixels inside the `fov` mask only.

    """

    if not(pred.data.shape == gt.data.shape == fov.data.shape):
        raise_error("Prediction %s, ground truth %s and FOV %s differ in "
                    "dimensions!" % (pred.data.shape, gt.data.shape,
                                     fov.data.shape), DimMismatch, logger)
    inside = fov.data.astype(bool)
    p = pred.data.astype(bool)[inside]
    g = gt.data.astype(bool)[inside]
    return(Confusion(int((p & g).sum()), int((~p & ~g).sum()),
                     int((p & ~g).sum()), int((~p & g).sum())))


def metrics(c, auc_value=None):
    """
    Computes accuracy, sensitivity, specificity, precision, recall and F1
    from the :obj:`~Confusion` `c`.

    Precision is 0 if nothing was predicted as vessel, and F1 is 0 if both
    precision and recall are 0.

    Raises
    ------
    EmptyFov
        If `c` counts no pixels.
    SingleClass
        If vessels or background are absent, which leaves sensitivity or
        specificity undefined.

    """

    if(c.total <= 0):
        raise_error("Confusion counts no pixels!", EmptyFov, logger)
    if(c.tp+c.fn <= 0 or c.tn+c.fp <= 0):
        raise_error("Ground truth holds only one class inside the FOV!",
                    SingleClass, logger)

    sn = c.tp/(c.tp+c.fn)
    sp = c.tn/(c.tn+c.fp)
    precision = c.tp/(c.tp+c.fp) if(c.tp+c.fp) else 0.0
    f1 = (2*precision*sn/(precision+sn)) if(precision+sn) else 0.0
    acc = (c.tp+c.tn)/c.total
    return(MetricsRow(acc, sn, sp, precision, sn, f1, auc_value))


def auc(scores, labels):
    """
    Returns the area under the ROC curve of `scores` against the binary
    `labels`, computed exactly as the Mann-Whitney rank statistic with
    average ranks for tied scores.

    """

    scores, labels = _check_scores(scores, labels)
    n_pos = int(labels.sum())
    n_neg = labels.size-n_pos
    ranks = rankdata(scores)
    rank_sum = ranks[labels].sum()
    return(float((rank_sum-n_pos*(n_pos+1)/2)/(n_pos*n_neg)))


def roc_curve(scores, labels):
    """
    Returns the ROC :obj:`~Curve` of `scores` against `labels`, with one
    point per distinct score plus the point (0, 0).

    """

    thresholds, tps, fps, n_pos, n_neg = _threshold_counts(scores, labels)
    return(Curve('roc', thresholds, fps/n_neg, tps/n_pos))


def pr_curve(scores, labels):
    """
    Returns the precision-recall :obj:`~Curve` of `scores` against `labels`,
    with one point per distinct score plus the point (0, 1).

    """

    thresholds, tps, fps, n_pos, _ = _threshold_counts(scores, labels)
    predicted = tps+fps
    precision = np.ones_like(tps)
    precision[1:] = tps[1:]/predicted[1:]
    return(Curve('pr', thresholds, tps/n_pos, precision))


def curve_area(curve):
    """
    Returns the trapezoidal area under `curve`.

    """

    dx = np.diff(curve.x)
    return(float((dx*(curve.y[1:]+curve.y[:-1])/2).sum()))


def evaluate_maps(image_ids, prob_maps, gts, fovs, threshold=0.5):
    """
    Evaluates probability maps against their ground truths inside their FOV
    masks.

    Returns
    -------
    rows : list of :obj:`~ResultRow` objects
        One row per image, followed by the row ``'all'`` pooling the pixels
        of all images.
    roc, pr : :obj:`~Curve` objects
        The curves of the pooled pixels.

    """

    rows = []
    all_scores, all_labels = [], []
    for image_id, prob, gt, fov in zip(image_ids, prob_maps, gts, fovs):
        c = confusion(binarize(prob, threshold), gt, fov)
        inside = fov.data.astype(bool)
        scores, labels = prob.data[inside], gt.data[inside]
        if(c.total and not(c.tp+c.fn and c.tn+c.fp)):
            raise_warning("Image %r holds a single class inside its FOV! Its "
                          "AUC and undefined rates are left empty."
                          % (image_id), logger)
            values = _single_class_metrics(c)
        else:
            values = metrics(c, auc(scores, labels))
        rows.append(ResultRow(image_id, c, values))
        all_scores.append(scores)
        all_labels.append(labels)

    # Pool all pixels
    scores = np.concatenate(all_scores)
    labels = np.concatenate(all_labels)
    pooled = Confusion(0, 0, 0, 0)
    for row in rows:
        pooled += row.confusion
    rows.append(ResultRow('all', pooled, metrics(pooled,
                                                 auc(scores, labels))))
    return(rows, roc_curve(scores, labels), pr_curve(scores, labels))


def mean_row(rows, image_id='mean'):
    """
    Returns the :obj:`~ResultRow` holding the arithmetic mean of every count
    and metric of `rows`.

    """

    counts = Confusion(*[float(np.mean([getattr(r.confusion, f.name)
                                        for r in rows]))
                         for f in fields(Confusion)])
    values = MetricsRow(*[_mean_defined([getattr(r.metrics, f.name)
                                         for r in rows])
                          for f in fields(MetricsRow)])
    return(ResultRow(image_id, counts, values))


# %% PROTOCOL FUNCTIONS
def kfold_splits(image_ids, strata, k, seed):
    """
    Partitions `image_ids` into `k` folds, stratified by `strata`.

    Within every stratum (taken in sorted order), the ids are shuffled with a
    generator seeded by `seed` and dealt to the folds round-robin. The dealing
    continues across strata, such that all folds end up within one image of
    each other, as do their counts per stratum.

    Parameters
    ----------
    image_ids : list of str
        The ids to partition.
    strata : dict of str or None
        The stratum of every id. Ids without one share a single stratum.
    k : int
        The number of folds.
    seed : int
        The seed of the shuffling.

    Returns
    -------
    folds : :obj:`~FoldSpec` object
        The folds, every fold sorted.

    """

    if not(2 <= k <= len(image_ids)):
        raise_error("Number of folds must lie in [2, %i], not %r!"
                    % (len(image_ids), k), BadK, logger)

    # Group ids by stratum
    strata = dict(strata or {})
    groups = {}
    for image_id in sorted(image_ids):
        groups.setdefault(strata.get(image_id, ''), []).append(image_id)

    # Deal the shuffled ids of every stratum round-robin
    rng = np.random.default_rng(seed)
    folds = [[] for _ in range(k)]
    counter = 0
    for stratum in sorted(groups):
        members = groups[stratum]
        for i in rng.permutation(len(members)):
            folds[counter % k].append(members[i])
            counter += 1

    # Return fold spec
    return(FoldSpec(k, tuple(tuple(sorted(fold)) for fold in folds),
                    {i: strata.get(i, '') for i in image_ids}))


def fit_and_evaluate(train_data, test_data, config, out_dir=None,
                     comm=None):
    """
    Trains a model on `train_data` and evaluates it on `test_data`.

    The preprocessing statistics are computed on the training images only and
    reused for the test images.

    Parameters
    ----------
    train_data, test_data : :obj:`~vesselfcn.dataset.Dataset` objects
        The training and test images.
    config : :obj:`~vesselfcn.config.RunConfig` object
        The configuration of all stages.

    Optional
    --------
    out_dir : str or None. Default: None
        If not *None*, the directory checkpoints are written to.
    comm : :obj:`~MPI.Intracomm` object or None. Default: None
        The communicator that inference is distributed over.

    Returns
    -------
    rows : list of :obj:`~ResultRow` objects
        The rows of every test image, followed by the pooled row ``'all'``.
    roc, pr : :obj:`~Curve` objects
        The curves of the pooled test pixels.
    model : :obj:`~vesselfcn.nn.models.Model` object
        The trained model.

    """

    train_cfg = config.train_config()
    infer_cfg = config.infer_config()
    clahe_params = config.clahe_params()

    # Preprocess the training images and build the patch sets
    train_imgs, stats = preprocess_pipeline(train_data.images, clahe_params,
                                            config.gamma)
    patches = build_training_set(train_imgs, train_data.labels, train_cfg)
    train_set, val_set = split_train_val(patches, train_cfg.val_fraction,
                                         train_cfg.seed)

    # Train the model
    model = build_model(**config.model_kwargs())
    model, _ = train(model, train_set, val_set, train_cfg, out_dir)

    # Predict and evaluate the test images
    test_imgs, _ = preprocess_pipeline(test_data.images, clahe_params,
                                       config.gamma, stats)
    prob_maps = [predict_timed(model, img, infer_cfg, comm)[0]
                 for img in test_imgs]
    rows, roc, pr = evaluate_maps(test_data.ids, prob_maps, test_data.labels,
                                  test_data.fovs, infer_cfg.threshold)
    return(rows, roc, pr, model)


def crossval(dataset, config, folds=None):
    """
    Runs stratified k-fold cross-validation on `dataset`.

    Every fold is used once as the test set of a model trained on the other
    folds, and is scored on the pooled FOV pixels of its images. Under MPI,
    the folds are distributed over the ranks.

    Parameters
    ----------
    dataset : :obj:`~vesselfcn.dataset.Dataset` object
        The images to cross-validate on.
    config : :obj:`~vesselfcn.config.RunConfig` object
        The configuration of all stages.

    Optional
    --------
    folds : :obj:`~FoldSpec` object or None. Default: None
        The folds to use. If *None*, they are made with
        :func:`~kfold_splits` using ``eval.k`` and ``eval.seed``.

    Returns
    -------
    rows : list of :obj:`~ResultRow` objects
        One row per fold (``'fold<i>'``), followed by their mean (``'mean'``).

    """

    if folds is None:
        folds = kfold_splits(dataset.ids, dataset.strata, config['eval.k'],
                             config['eval.seed'])

    # Run the folds of this rank
    local = []
    for index in _mpi.split_work(folds.k):
        train_ids, test_ids = folds.train_test(index)
        rows, _, _, _ = fit_and_evaluate(dataset.subset(train_ids),
                                         dataset.subset(test_ids), config,
                                         comm=_mpi.COMM_SELF)
        pooled = rows[-1]
        local.append(ResultRow('fold%i' % (index), pooled.confusion,
                               pooled.metrics))
        logger.info("Fold %i/%i: acc=%.4f, auc=%.4f"
                    % (index+1, folds.k, pooled.metrics.acc,
                       pooled.metrics.auc))

    # Merge all folds in order and add their mean
    fold_rows = _mpi.gather_ordered(local)
    return(fold_rows+[mean_row(fold_rows)])


def holdout(dataset, config, out_dir=None):
    """
    Trains on the images outside the predefined test split of `dataset` and
    evaluates on the images inside it.

    Returns
    -------
    rows : list of :obj:`~ResultRow` objects
        One row per test image, followed by the pooled row ``'all'``.
    roc, pr : :obj:`~Curve` objects
        The curves of the pooled test pixels.
    model : :obj:`~vesselfcn.nn.models.Model` object
        The trained model.

    """

    train_data, test_data = dataset.split()
    logger.info("Holdout split: %i training and %i test images."
                % (len(train_data), len(test_data)))
    return(fit_and_evaluate(train_data, test_data, config, out_dir))


def stride_study(model, images, labels, fovs, strides, cfg=InferConfig()):
    """
    Predicts the preprocessed `images` at every inference stride in
    `strides` and reports the mean wall-clock time per image and the metrics
    of the pooled FOV pixels.

    Returns
    -------
    rows : list of :obj:`~StrideRow` objects
        One row per stride, in the given order.

    """

    rows = []
    ids = [str(i) for i in range(len(images))]
    for stride in strides:
        stride_cfg = InferConfig('stride', stride, cfg.batch_size,
                                 cfg.threshold, cfg.patch_size)
        results = [predict_timed(model, img, stride_cfg) for img in images]
        seconds = float(np.mean([t for _, t in results]))
        eval_rows, _, _ = evaluate_maps(ids, [p for p, _ in results], labels,
                                        fovs, cfg.threshold)
        row = StrideRow(stride, cfg.patch_size, seconds, eval_rows[-1].metrics)
        rows.append(row)
        rprint("Stride %s: %.3f s/image, auc=%.4f"
               % (row.label, seconds, row.metrics.auc))
    return(rows)


# %% OUTPUT FUNCTIONS
def write_metrics_csv(rows, filename):
    """
    Writes the :obj:`~ResultRow` objects `rows` to the CSV file `filename`.

    """

    _write_csv(filename, METRICS_HEADER, [
        [row.image_id]+[_fmt(getattr(row.confusion, f.name))
                        for f in fields(Confusion)] +
        [_fmt(getattr(row.metrics, name)) for name in METRICS_HEADER[5:]]
        for row in rows])


def write_curve_csv(curve, filename):
    _write_csv(filename, CURVE_HEADER, [
        [repr(float(t)), repr(float(x)), repr(float(y))]
        for t, x, y in zip(curve.thresholds, curve.x, curve.y)])


def write_stride_csv(rows, filename):
    _write_csv(filename, STRIDE_HEADER, [
        [row.label, "%.6f" % (row.seconds)] +
        [_fmt(getattr(row.metrics, name)) for name in STRIDE_HEADER[2:]]
        for row in rows])


def plot_curves(roc, pr, filename):
    """
    Plots the ROC curve `roc` and the precision-recall curve `pr` side by
    side and saves the figure to `filename`.

    """

    # Import pyplot only when plotting
    import matplotlib.pyplot as plt

    # Plot both curves
    fig, (ax_roc, ax_pr) = plt.subplots(1, 2, figsize=(10, 4.5))
    ax_roc.plot(roc.x, roc.y, label="AUC = %.4f" % (curve_area(roc)))
    ax_roc.plot([0, 1], [0, 1], 'k--', lw=0.5)
    ax_roc.set_xlabel("False positive rate")
    ax_roc.set_ylabel("True positive rate")
    ax_roc.set_title("ROC curve")
    ax_roc.legend(loc='lower right')
    ax_pr.plot(pr.x, pr.y)
    ax_pr.set_xlabel("Recall")
    ax_pr.set_ylabel("Precision")
    ax_pr.set_title("Precision-recall curve")
    for ax in (ax_roc, ax_pr):
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1.01)

    # Save figure
    try:
        fig.savefig(filename, bbox_inches='tight')
    except OSError as error:
        raise_error("Cannot write figure %r: %s" % (filename, error),
                    IoFailure, logger)
    finally:
        plt.close(fig)


# %% HELPER FUNCTIONS
# Computes the defined metrics of an image holding a single class
def _single_class_metrics(c):
    sn = c.tp/(c.tp+c.fn) if(c.tp+c.fn) else None
    sp = c.tn/(c.tn+c.fp) if(c.tn+c.fp) else None
    precision = c.tp/(c.tp+c.fp) if(c.tp+c.fp) else 0.0
    if sn is None:
        f1 = None
    else:
        f1 = (2*precision*sn/(precision+sn)) if(precision+sn) else 0.0
    return(MetricsRow((c.tp+c.tn)/c.total, sn, sp, precision, sn, f1))


# Averages the values that are not None
def _mean_defined(values):
    values = [value for value in values if value is not None]
    return(float(np.mean(values)) if values else None)


# Checks scores and labels and returns them as flat arrays
def _check_scores(scores, labels):
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel().astype(bool)
    if(scores.shape != labels.shape):
        raise_error("Got %i scores but %i labels!"
                    % (scores.size, labels.size), DimMismatch, logger)
    if(labels.all() or not labels.any()):
        raise_error("Scores must cover both classes!", SingleClass, logger)
    return(scores, labels)


# Counts true and false positives at every distinct threshold
# Every distinct score keeps its point, unlike sklearn.metrics.roc_curve with
# its default drop_intermediate=True
def _threshold_counts(scores, labels):
    scores, labels = _check_scores(scores, labels)

    # Sort by descending score and find the last index of every score
    order = np.argsort(-scores, kind='stable')
    scores = scores[order]
    labels = labels[order]
    last = np.r_[np.nonzero(np.diff(scores))[0], scores.size-1]

    # Cumulative counts, starting at the infinite threshold
    tps = np.r_[0, np.cumsum(labels)[last]].astype(np.float64)
    fps = np.r_[0, last+1].astype(np.float64)-tps
    thresholds = np.r_[np.inf, scores[last]]
    return(thresholds, tps, fps, tps[-1], fps[-1])


# Writes rows to a CSV file
def _write_csv(filename, header, rows):
    try:
        with open(filename, 'w', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as error:
        raise_error("Cannot write %r: %s" % (filename, error), IoFailure,
                    logger)


# Formats a single CSV value
def _fmt(value):
    if value is None:
        return('')
    if isinstance(value, (int, np.integer)):
        return(str(int(value)))
    return(repr(float(value)))
