# -*- coding: utf-8 -*-

"""
Functional
==========
Forward and backward passes of all operations used by the networks, written
as pure functions on (batch, channel, height, width) NumPy arrays.

Every forward function returns its output together with a cache, which the
matching backward function takes along with the gradient of the output.

"""


# %% IMPORTS
# Package imports
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

# vesselfcn imports
from vesselfcn._internal import (
    OddSpatialDims, ShapeMismatch, get_logger, raise_error)

# All declaration
__all__ = ['add_backward', 'add_forward', 'batchnorm_backward',
           'batchnorm_forward', 'concat_backward', 'concat_forward',
           'conv_backward', 'conv_forward', 'dropout_backward',
           'dropout_forward', 'maxpool2_backward', 'maxpool2_forward',
           'relu_backward', 'relu_forward', 'softmax', 'softmax_xent',
           'upsample2_backward', 'upsample2_forward']

# Initialize logger
logger = get_logger(__name__)


# %% CONVOLUTION
def conv_forward(x, w, b=None):
    """
    Stride-1 cross-correlation of `x` with the kernels `w`, zero-padded such
    that the spatial dimensions are preserved, plus the bias `b`.

    Parameters
    ----------
    x : :obj:`~numpy.ndarray` of shape (n, in_c, h, w)
        The input feature maps.
    w : :obj:`~numpy.ndarray` of shape (out_c, in_c, k, k)
        The kernels, with `k` odd.

    Optional
    --------
    b : :obj:`~numpy.ndarray` of shape (out_c,) or None. Default: None
        The bias of every output channel. If *None*, no bias is added.

    Returns
    -------
    y : :obj:`~numpy.ndarray` of shape (n, out_c, h, w)
        The output feature maps.
    cache : tuple
        The values required by :func:`~conv_backward`.

    """

    # Check shapes
    if(x.ndim != 4 or w.ndim != 4 or x.shape[1] != w.shape[1] or
       w.shape[2] != w.shape[3] or not w.shape[2] % 2):
        raise_error("Cannot convolve input of shape %s with kernels of shape "
                    "%s!" % (x.shape, w.shape), ShapeMismatch, logger)
    if(b is not None and b.shape != (w.shape[0],)):
        raise_error("Bias shape %s does not match %i output channels!"
                    % (b.shape, w.shape[0]), ShapeMismatch, logger)

    # Zero-pad input and obtain all k x k windows
    k = w.shape[2]
    cols = _windows(x, k)

    # Contract windows with kernels over channel and kernel axes
    y = np.tensordot(cols, w, axes=([1, 4, 5], [1, 2, 3]))
    y = np.ascontiguousarray(y.transpose(0, 3, 1, 2))
    if b is not None:
        y += b[np.newaxis, :, np.newaxis, np.newaxis]

    # Return output and cache
    return(y, (cols, w, b is not None))


def conv_backward(grad_out, cache):
    """
    Backward pass of :func:`~conv_forward`.

    Returns
    -------
    grad_x, grad_w, grad_b : :obj:`~numpy.ndarray` objects
        The gradients of the input, the kernels and the bias. `grad_b` is
        *None* if the forward pass used no bias.

    """

    # Unpack cache
    cols, w, has_bias = cache
    k = w.shape[2]
    if(grad_out.shape[1] != w.shape[0] or
       grad_out.shape[0] != cols.shape[0] or
       grad_out.shape[2:] != cols.shape[2:4]):
        raise_error("Output gradient of shape %s does not match the forward "
                    "pass!" % (grad_out.shape,), ShapeMismatch, logger)

    # Kernel and bias gradients
    grad_w = np.tensordot(grad_out, cols, axes=([0, 2, 3], [0, 2, 3]))
    grad_b = grad_out.sum(axis=(0, 2, 3)) if has_bias else None

    # Input gradient is the full correlation with the flipped kernels
    grad_cols = _windows(grad_out, k)
    grad_x = np.tensordot(grad_cols, w[:, :, ::-1, ::-1],
                          axes=([1, 4, 5], [0, 2, 3]))
    grad_x = np.ascontiguousarray(grad_x.transpose(0, 3, 1, 2))

    # Return gradients
    return(grad_x, grad_w, grad_b)


# %% ACTIVATIONS AND REGULARIZATION
def relu_forward(x):
    mask = x > 0
    return(x*mask, mask)


def relu_backward(grad_out, mask):
    return(grad_out*mask)


def dropout_forward(x, rate, rng, training):
    """
    Inverted dropout: in training mode, zeroes every activation with
    probability `rate` and scales the survivors by ``1/(1-rate)``. In
    evaluation mode, or if `rate` is zero, this is the identity.

    """

    if not training or not rate:
        return(x, None)
    keep = rng.random(x.shape) >= rate
    scale = keep.astype(x.dtype)/x.dtype.type(1-rate)
    return(x*scale, scale)


def dropout_backward(grad_out, scale):
    if scale is None:
        return(grad_out)
    return(grad_out*scale)


# %% RESAMPLING
def maxpool2_forward(x):
    """
    2 x 2 max pooling with stride 2. On ties, the first element of a window
    in row-major order is taken as the maximum.

    """

    # Check dimensions
    n, c, h, w = x.shape
    if(h % 2 or w % 2):
        raise_error("Max pooling requires even spatial dimensions, not %s!"
                    % ((h, w),), OddSpatialDims, logger)

    # Collect every window as its last axis, in row-major order
    win = x.reshape(n, c, h//2, 2, w//2, 2).transpose(0, 1, 2, 4, 3, 5)
    win = win.reshape(n, c, h//2, w//2, 4)
    argmax = win.argmax(axis=-1)
    y = np.take_along_axis(win, argmax[..., np.newaxis], axis=-1)[..., 0]

    # Return output and cache
    return(y, (x.shape, argmax))


def maxpool2_backward(grad_out, cache):
    shape, argmax = cache
    n, c, h, w = shape
    grad_win = np.zeros((n, c, h//2, w//2, 4), dtype=grad_out.dtype)
    np.put_along_axis(grad_win, argmax[..., np.newaxis],
                      grad_out[..., np.newaxis], axis=-1)
    grad_x = grad_win.reshape(n, c, h//2, w//2, 2, 2).transpose(
        0, 1, 2, 4, 3, 5)
    return(grad_x.reshape(shape))


def upsample2_forward(x):
    """
    Nearest-neighbor upsampling by a factor of 2 along both spatial axes.

    """

    return(x.repeat(2, axis=2).repeat(2, axis=3), None)


def upsample2_backward(grad_out, cache=None):
    n, c, h, w = grad_out.shape
    return(grad_out.reshape(n, c, h//2, 2, w//2, 2).sum(axis=(3, 5)))


# %% MERGING
def concat_forward(*xs):
    """
    Concatenates feature maps along the channel axis.

    """

    shapes = [x.shape for x in xs]
    if any(s[:1]+s[2:] != shapes[0][:1]+shapes[0][2:] for s in shapes):
        raise_error("Cannot concatenate feature maps of shapes %s!"
                    % (shapes,), ShapeMismatch, logger)
    return(np.concatenate(xs, axis=1), [s[1] for s in shapes])


def concat_backward(grad_out, channels):
    return(np.split(grad_out, np.cumsum(channels)[:-1], axis=1))


def add_forward(a, b):
    if(a.shape != b.shape):
        raise_error("Cannot add feature maps of shapes %s and %s!"
                    % (a.shape, b.shape), ShapeMismatch, logger)
    return(a+b, None)


def add_backward(grad_out, cache=None):
    return(grad_out, grad_out)


# %% NORMALIZATION
def batchnorm_forward(x, gamma, beta, running_mean, running_var, training,
                      momentum=0.9, eps=1e-5):
    """
    Per-channel batch normalization with learnable scale `gamma` and shift
    `beta`.

    In training mode, the batch statistics are used and the running
    statistics are updated in-place as ``momentum*running +
    (1-momentum)*batch``. In evaluation mode, the running statistics are used.

    """

    # Check shapes
    if(gamma.shape != (x.shape[1],)):
        raise_error("Batch normalization of %i channels got %i scales!"
                    % (x.shape[1], gamma.size), ShapeMismatch, logger)

    # Obtain statistics
    if training:
        mean = x.mean(axis=(0, 2, 3))
        var = x.var(axis=(0, 2, 3))
        running_mean *= momentum
        running_mean += (1-momentum)*mean
        running_var *= momentum
        running_var += (1-momentum)*var
    else:
        mean = running_mean
        var = running_var

    # Normalize, scale and shift
    inv_std = 1/np.sqrt(var+eps)
    x_hat = (x-mean[:, np.newaxis, np.newaxis])*inv_std[:, np.newaxis,
                                                        np.newaxis]
    y = (gamma[:, np.newaxis, np.newaxis]*x_hat +
         beta[:, np.newaxis, np.newaxis])

    # Return output and cache
    return(y.astype(x.dtype, copy=False), (x_hat, inv_std, gamma, training))


def batchnorm_backward(grad_out, cache):
    """
    Backward pass of :func:`~batchnorm_forward`.

    Returns
    -------
    grad_x, grad_gamma, grad_beta : :obj:`~numpy.ndarray` objects

    """

    x_hat, inv_std, gamma, training = cache
    grad_gamma = (grad_out*x_hat).sum(axis=(0, 2, 3))
    grad_beta = grad_out.sum(axis=(0, 2, 3))
    grad_xhat = grad_out*gamma[:, np.newaxis, np.newaxis]
    inv_std = inv_std[:, np.newaxis, np.newaxis]

    # Running statistics are constants in evaluation mode
    if not training:
        return(grad_xhat*inv_std, grad_gamma, grad_beta)

    # Batch statistics depend on the input in training mode
    m = grad_out.size//grad_out.shape[1]
    sum_g = grad_xhat.sum(axis=(0, 2, 3))[:, np.newaxis, np.newaxis]
    sum_gx = (grad_xhat*x_hat).sum(axis=(0, 2, 3))[:, np.newaxis, np.newaxis]
    grad_x = inv_std/m*(m*grad_xhat-sum_g-x_hat*sum_gx)
    return(grad_x, grad_gamma, grad_beta)


# %% LOSS
def softmax(logits):
    """
    Softmax over the channel axis of `logits`.

    """

    shifted = logits-logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return(exp/exp.sum(axis=1, keepdims=True))


def softmax_xent(logits, labels):
    """
    Mean per-pixel cross-entropy of the channel softmax of `logits` against
    the integer class `labels`.

    Parameters
    ----------
    logits : :obj:`~numpy.ndarray` of shape (n, 2, h, w)
        The raw network outputs.
    labels : :obj:`~numpy.ndarray` of shape (n, h, w)
        The class of every pixel, 0 (background) or 1 (vessel).

    Returns
    -------
    loss : float
        The mean cross-entropy over all pixels.
    grad_logits : :obj:`~numpy.ndarray` of shape (n, 2, h, w)
        The gradient of `loss` with respect to `logits`, being
        ``(softmax-onehot)/n_pixels``.

    """

    # Check shapes
    if(logits.ndim != 4 or logits.shape[1] != 2 or
       labels.shape != logits.shape[:1]+logits.shape[2:]):
        raise_error("Logits of shape %s do not match labels of shape %s!"
                    % (logits.shape, labels.shape), ShapeMismatch, logger)

    # Compute log-probabilities in a numerically stable way
    shifted = logits-logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_prob = shifted-log_norm

    # Compute loss
    onehot = np.stack([labels == 0, labels == 1], axis=1).astype(logits.dtype)
    n_pix = labels.size
    loss = -float((onehot*log_prob).sum(dtype=np.float64))/n_pix

    # Compute gradient
    grad = (np.exp(log_prob)-onehot)/logits.dtype.type(n_pix)

    # Return loss and gradient
    return(loss, grad)


# %% HELPER FUNCTIONS
# Zero-pads the spatial axes and returns all k x k windows
def _windows(x, k):
    p = (k-1)//2
    if p:
        x = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
    return(sliding_window_view(x, (k, k), axis=(2, 3)))
