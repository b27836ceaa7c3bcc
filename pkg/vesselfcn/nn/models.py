# -*- coding: utf-8 -*-

"""
Models
======
Provides the two fully convolutional segmentation networks: U-Net, with
concatenated skip connections between its encoder and decoder, and
LadderNet, a chain of encoder-decoder branch pairs built from
shared-weights residual blocks whose branches are joined by summation.

Both networks map (n, 1, h, w) patches onto (n, 2, h, w) logits, of which
channel 0 is the background and channel 1 the vessel class.

"""


# %% IMPORTS
# Package imports
import numpy as np

# vesselfcn imports
from vesselfcn._internal import (
    IndivisibleInput, InvalidConfigValue, get_logger, raise_error)
from vesselfcn.nn import functional as F
from vesselfcn.nn.blocks import (
    ConvStage, DownStage, SharedResidualBlock, UpStage)
from vesselfcn.nn.layers import (
    Concat, Conv2D, MaxPool2, Module, ReLU, Upsample2, checked)

# All declaration
__all__ = ['LadderNet', 'Model', 'UNet', 'build_laddernet', 'build_model',
           'build_unet']

# Initialize logger
logger = get_logger(__name__)


# %% MODEL BASE CLASS DEFINITION
class Model(Module):
    """
    Base class of the segmentation networks.

    Parameters
    ----------
    name : {'unet', 'laddernet'}
        The architecture name.
    base_channels : int
        The number of feature channels of the first level. Every deeper level
        doubles it.
    depth : int
        The number of resolution levels.
    dropout : float
        The dropout rate.
    seed : int
        Seed for the weight initialization and the dropout masks.
    dtype : :obj:`~numpy.dtype`
        The floating-point type of all parameters and activations.

    """

    def __init__(self, name, base_channels, depth, dropout, seed, dtype):
        super().__init__()

        # Check hyperparameters
        if(base_channels < 1 or depth < 1 or not 0 <= dropout < 1):
            raise_error("Invalid network hyperparameters: base_channels=%r, "
                        "depth=%r, dropout=%r!"
                        % (base_channels, depth, dropout),
                        InvalidConfigValue, logger)

        # Save hyperparameters
        self.name = name
        self.hyper = {'base_channels': base_channels, 'depth': depth,
                      'dropout': dropout}
        self.dtype = np.dtype(dtype)
        self.channels = [base_channels*2**level for level in range(depth)]

        # Make independent generators for initialization and dropout
        init_seq, drop_seq = np.random.SeedSequence(seed).spawn(2)
        self.init_rng = np.random.default_rng(init_seq)
        self.drop_rng = np.random.default_rng(drop_seq)

    # %% CLASS PROPERTIES
    @property
    def divisor(self):
        """
        int: The number that input heights and widths must be divisible by.

        """

        return(2**(self.hyper['depth']-1))

    # %% GENERAL CLASS METHODS
    def check_input(self, x):
        """
        Checks that `x` is a valid (n, 1, h, w) input of this model.

        """

        if(x.ndim != 4 or x.shape[1] != 1 or
           x.shape[2] % self.divisor or x.shape[3] % self.divisor):
            raise_error("Model %r requires (n, 1, h, w) inputs with h and w "
                        "divisible by %i, not %s!"
                        % (self.name, self.divisor, x.shape),
                        IndivisibleInput, logger)
        return(np.asarray(x, dtype=self.dtype))

    def loss_and_grad(self, x, labels):
        """
        Runs the forward and backward pass on the patches `x` with `labels`,
        accumulating all parameter gradients, and returns the loss.

        """

        loss, grad = F.softmax_xent(self.forward(x), labels)
        self.backward(grad)
        return(loss)

    def predict_proba(self, x, batch_size=256):
        """
        Returns the 32-bit vessel probability of every pixel of the (n, 1, h,
        w) patches `x`, running the forward pass on `batch_size` patches at a
        time. The current train/eval mode is used as is.

        """

        probs = np.empty((len(x),)+tuple(x.shape[2:]), dtype=np.float32)
        for start in range(0, len(x), batch_size):
            logits = self.forward(x[start:start+batch_size])
            probs[start:start+batch_size] = F.softmax(logits)[:, 1]
        return(probs)


# %% U-NET CLASS DEFINITION
class UNet(Model):
    """
    U-Net with `depth` levels. Every encoder level holds two 3 x 3
    convolutions with dropout in between and is followed by 2 x 2 max pooling;
    every decoder level upsamples, concatenates the encoder features of its
    level and applies two 3 x 3 convolutions. A final 1 x 1 convolution
    outputs the two class channels.

    """

    def __init__(self, base_channels=32, depth=3, dropout=0.2, seed=0,
                 dtype=np.float32):
        super().__init__('unet', base_channels, depth, dropout, seed, dtype)
        ch = self.channels
        rng = self.init_rng

        # Encoder
        self.enc = []
        self.pool = []
        for level in range(depth):
            in_c = 1 if not level else ch[level-1]
            if level:
                self.pool.append(self.add_child('pool%i' % (level),
                                                MaxPool2()))
            self.enc.append(self.add_child('enc%i' % (level), ConvStage(
                in_c, ch[level], dropout, rng, self.drop_rng, dtype,
                'enc%i' % (level))))

        # Decoder, indexed by level
        self.up = [None]*(depth-1)
        self.cat = [None]*(depth-1)
        self.dec = [None]*(depth-1)
        for level in reversed(range(depth-1)):
            self.up[level] = self.add_child('up%i' % (level), Upsample2())
            self.cat[level] = self.add_child('cat%i' % (level), Concat())
            self.dec[level] = self.add_child('dec%i' % (level), ConvStage(
                ch[level+1]+ch[level], ch[level], dropout, rng, self.drop_rng,
                dtype, 'dec%i' % (level)))

        # Output layer
        self.head = self.add_child('head', Conv2D(ch[0], 2, 1, rng, dtype))

    def forward(self, x):
        # Encoder
        h = self.check_input(x)
        self._skips = []
        for level, stage in enumerate(self.enc):
            if level:
                h = self.pool[level-1].forward(h)
            h = stage.forward(h)
            self._skips.append(h)

        # Decoder
        for level in reversed(range(len(self.dec))):
            h = self.cat[level].forward(self.up[level].forward(h),
                                        self._skips[level])
            h = self.dec[level].forward(h)

        # Output layer
        return(checked('head', self.head, h))

    def backward(self, grad_out):
        # Output layer
        grad = self.head.backward(grad_out)

        # Decoder, in reverse order of the forward pass
        skip_grads = [None]*len(self.enc)
        for level in range(len(self.dec)):
            grad = self.dec[level].backward(grad)
            grad, skip_grads[level] = self.cat[level].backward(grad)
            grad = self.up[level].backward(grad)

        # Encoder
        for level in reversed(range(len(self.enc))):
            if skip_grads[level] is not None:
                grad = grad+skip_grads[level]
            grad = self.enc[level].backward(grad)
            if level:
                grad = self.pool[level-1].backward(grad)

        # Return input gradient
        self._skips = None
        return(grad)


# %% LADDERNET CLASS DEFINITION
class LadderNet(Model):
    """
    LadderNet with `branch_pairs` encoder-decoder branch pairs of `depth`
    levels each.

    An initial 3 x 3 convolution lifts the input to `base_channels`. Every
    level of every branch is a :class:`~SharedResidualBlock`. Encoder levels
    are connected by max pooling plus a 3 x 3 convolution doubling the
    channels, decoder levels by upsampling plus a 3 x 3 convolution halving
    them. Within a pair, a decoder level sums the upsampled deeper level with
    the encoder features of its level. The encoder of a next pair sums its
    downsampled features with the decoder features of the previous pair at
    every level. A final 1 x 1 convolution outputs the two class channels.

    """

    def __init__(self, base_channels=32, depth=3, branch_pairs=2,
                 dropout=0.2, seed=0, dtype=np.float32):
        super().__init__('laddernet', base_channels, depth, dropout, seed,
                         dtype)
        if(branch_pairs < 1):
            raise_error("LadderNet requires at least one branch pair!",
                        InvalidConfigValue, logger)
        self.hyper['branch_pairs'] = branch_pairs
        ch = self.channels
        rng = self.init_rng

        # Input layer
        self.stem = self.add_child('stem', Conv2D(1, ch[0], 3, rng, dtype))
        self.stem_relu = self.add_child('stem_relu', ReLU())

        # Branch pairs
        self.enc, self.down, self.dec, self.up = [], [], [], []
        for pair in range(branch_pairs):
            enc, down = [], [None]
            for level in range(depth):
                name = 'pair%i.enc%i' % (pair, level)
                if level:
                    down.append(self.add_child(name+'.down', DownStage(
                        ch[level-1], ch[level], rng, dtype, name+'.down')))
                enc.append(self.add_child(name, SharedResidualBlock(
                    ch[level], dropout, rng, self.drop_rng, dtype, name)))
            dec, up = [None]*(depth-1), [None]*(depth-1)
            for level in reversed(range(depth-1)):
                name = 'pair%i.dec%i' % (pair, level)
                up[level] = self.add_child(name+'.up', UpStage(
                    ch[level+1], ch[level], rng, dtype, name+'.up'))
                dec[level] = self.add_child(name, SharedResidualBlock(
                    ch[level], dropout, rng, self.drop_rng, dtype, name))
            self.enc.append(enc)
            self.down.append(down)
            self.dec.append(dec)
            self.up.append(up)

        # Output layer
        self.head = self.add_child('head', Conv2D(ch[0], 2, 1, rng, dtype))

    @property
    def blocks(self):
        """
        list of :obj:`~SharedResidualBlock`: All residual blocks.

        """

        return([block for pair in range(len(self.enc))
                for block in self.enc[pair]+self.dec[pair]])

    def forward(self, x):
        depth = self.hyper['depth']

        # Input layer
        h = checked('stem', self.stem, self.check_input(x))
        h = self.stem_relu.forward(h)

        # Branch pairs
        prev_dec = None
        for pair in range(len(self.enc)):
            # Encoder, summing the previous decoder laterally
            enc_out = []
            for level in range(depth):
                if not level:
                    inp = h if prev_dec is None else prev_dec[0]
                else:
                    inp = self.down[pair][level].forward(enc_out[level-1])
                    if prev_dec is not None:
                        inp = inp+prev_dec[level]
                enc_out.append(self.enc[pair][level].forward(inp))

            # Decoder, summing the encoder of this pair
            dec_out = [None]*depth
            dec_out[-1] = enc_out[-1]
            for level in reversed(range(depth-1)):
                inp = self.up[pair][level].forward(dec_out[level+1])
                dec_out[level] = self.dec[pair][level].forward(
                    inp+enc_out[level])
            prev_dec = dec_out

        # Output layer
        return(checked('head', self.head, prev_dec[0]))

    def backward(self, grad_out):
        depth = self.hyper['depth']

        # Output layer
        grad_dec = [None]*depth
        grad_dec[0] = self.head.backward(grad_out)

        # Branch pairs, last one first
        for pair in reversed(range(len(self.enc))):
            grad_enc = [None]*depth
            grad_prev = [None]*depth

            # Decoder, in reverse order of the forward pass
            for level in range(depth-1):
                grad = self.dec[pair][level].backward(grad_dec[level])
                grad_enc[level] = _accumulate(grad_enc[level], grad)
                grad_dec[level+1] = _accumulate(
                    grad_dec[level+1], self.up[pair][level].backward(grad))
            grad_enc[-1] = _accumulate(grad_enc[-1], grad_dec[-1])

            # Encoder
            for level in reversed(range(depth)):
                grad = self.enc[pair][level].backward(grad_enc[level])
                if level:
                    grad_enc[level-1] = _accumulate(
                        grad_enc[level-1],
                        self.down[pair][level].backward(grad))
                if pair:
                    grad_prev[level] = _accumulate(grad_prev[level], grad)
                elif not level:
                    grad_stem = grad
            grad_dec = grad_prev

        # Input layer
        grad = self.stem_relu.backward(grad_stem)
        return(self.stem.backward(grad))


# %% FUNCTION DEFINITIONS
# Sums gradients, treating None as zero
def _accumulate(total, grad):
    return(grad if total is None else total+grad)


def build_unet(base_channels=32, depth=3, dropout=0.2, seed=0,
               dtype=np.float32):
    """
    Builds a :obj:`~UNet`. With the defaults, the channels double from 32 to
    64 to 128 and the network holds 471,010 trainable parameters.

    """

    return(UNet(base_channels, depth, dropout, seed, dtype))


def build_laddernet(base_channels=32, depth=3, branch_pairs=2, dropout=0.2,
                    seed=0, dtype=np.float32):
    """
    Builds a :obj:`~LadderNet`.

    """

    return(LadderNet(base_channels, depth, branch_pairs, dropout, seed,
                     dtype))


def build_model(name, base_channels=32, depth=3, dropout=0.2, branch_pairs=2,
                seed=0, dtype=np.float32):
    """
    Builds the network called `name` ('unet' or 'laddernet').

    """

    if(name == 'unet'):
        return(build_unet(base_channels, depth, dropout, seed, dtype))
    elif(name == 'laddernet'):
        return(build_laddernet(base_channels, depth, branch_pairs, dropout,
                               seed, dtype))
    else:
        raise_error("Unknown model %r! Use 'unet' or 'laddernet'." % (name),
                    InvalidConfigValue, logger)
