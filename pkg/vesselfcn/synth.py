# -*- coding: utf-8 -*-

"""
Synthetic data
==============
Provides a deterministic generator of synthetic fundus-like images with
exactly known vessel annotations, allowing the full pipeline to be trained
and evaluated without clinical data.

Every image shows a dark reddish disc (the field of view) on a black
background with additive Gaussian noise. Vessels are smooth curves made of
two quadratic Bezier segments joined at an interior point, running between
two points on the boundary of the disc, and are drawn darker than their
surroundings.

"""


# %% IMPORTS
# Built-in imports
from dataclasses import dataclass

# Package imports
import numpy as np
from scipy import ndimage

# vesselfcn imports
from vesselfcn._internal import InvalidConfigValue, get_logger, raise_error
from vesselfcn.image_io import BinaryMask, RgbImage, round_half_away

# All declaration
__all__ = ['SynthConfig', 'generate', 'synth_ids']

# Initialize logger
logger = get_logger(__name__)

# Mean background color inside the field of view
BACKGROUND_RGB = (150.0, 60.0, 30.0)

# Fraction of the background intensity that remains on vessels
VESSEL_FACTOR = 0.55


# %% CLASS DEFINITIONS
@dataclass(frozen=True)
class SynthConfig(object):
    """
    Configuration of the synthetic image generator.

    Attributes
    ----------
    count : int
        The number of images to generate.
    size : int
        The width and height of every image. Must be divisible by 4.
    vessels_min, vessels_max : int
        The inclusive range of the number of vessels per image.
    width_min, width_max : float
        The range of the vessel widths in pixels.
    noise_sigma : float
        The standard deviation of the additive noise per color channel.
    fov_radius : float
        The radius of the field of view as a fraction of `size`.
    seed : int
        The seed from which the seeds of all images are derived.
    test_count : int
        The number of trailing images that form the predefined test split.

    """

    count: int = 12
    size: int = 128
    vessels_min: int = 3
    vessels_max: int = 6
    width_min: float = 1.0
    width_max: float = 4.0
    noise_sigma: float = 8.0
    fov_radius: float = 0.45
    seed: int = 0
    test_count: int = 4

    def __post_init__(self):
        if(self.count < 1):
            raise_error("At least one image must be generated!",
                        InvalidConfigValue, logger)
        if(self.size < 16 or self.size % 4):
            raise_error("Image size must be a multiple of 4 of at least 16, "
                        "not %r!" % (self.size), InvalidConfigValue, logger)
        if not(1 <= self.vessels_min <= self.vessels_max):
            raise_error("Invalid vessel count range [%r, %r]!"
                        % (self.vessels_min, self.vessels_max),
                        InvalidConfigValue, logger)
        if not(0 < self.width_min <= self.width_max):
            raise_error("Invalid vessel width range [%r, %r]!"
                        % (self.width_min, self.width_max),
                        InvalidConfigValue, logger)
        if not(0 < self.fov_radius <= 0.5):
            raise_error("FOV radius must lie in (0, 0.5], not %r!"
                        % (self.fov_radius), InvalidConfigValue, logger)
        if(self.noise_sigma < 0 or not 0 <= self.test_count < self.count):
            raise_error("Invalid noise level %r or test count %r!"
                        % (self.noise_sigma, self.test_count),
                        InvalidConfigValue, logger)


# %% FUNCTION DEFINITIONS
def generate(cfg=SynthConfig()):
    """
    Generates ``cfg.count`` synthetic images.

    Returns
    -------
    triples : list of (:obj:`~RgbImage`, :obj:`~BinaryMask`, \
        :obj:`~BinaryMask`) tuples
        Every image with its vessel annotation and FOV mask. The annotation
        holds exactly the drawn vessel pixels.

    """

    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.count)
    triples = [_generate_one(cfg, np.random.default_rng(seed))
               for seed in seeds]
    logger.info("Generated %i synthetic images of %ix%i pixels."
                % (cfg.count, cfg.size, cfg.size))
    return(triples)


def synth_ids(cfg=SynthConfig()):
    """
    Returns the ids of all images of `cfg` and the ids of its test split.

    """

    ids = ["synth_%03i" % (i) for i in range(cfg.count)]
    return(ids, ids[cfg.count-cfg.test_count:])


# %% HELPER FUNCTIONS
# Generates a single image with its annotation and FOV mask
def _generate_one(cfg, rng):
    size = cfg.size
    center = (size-1)/2
    radius = cfg.fov_radius*size

    # Field of view
    yy, xx = np.mgrid[:size, :size]
    fov = (yy-center)**2+(xx-center)**2 <= radius**2

    # Draw all vessels
    vessels = np.zeros((size, size), dtype=bool)
    for _ in range(rng.integers(cfg.vessels_min, cfg.vessels_max+1)):
        width = rng.uniform(cfg.width_min, cfg.width_max)
        centerline = _rasterize(_vessel_curve(rng, center, radius), size)
        dist = ndimage.distance_transform_edt(~centerline)
        vessels |= dist < 0.5*width
    vessels &= fov

    # Color the image
    base = np.array(BACKGROUND_RGB)*np.where(vessels, VESSEL_FACTOR,
                                             1)[..., np.newaxis]
    noisy = base+rng.normal(0, cfg.noise_sigma, size=(size, size, 3))
    noisy[~fov] = 0
    rgb = np.clip(round_half_away(noisy), 0, 255).astype(np.uint8)

    # Return triple
    return(RgbImage(rgb), BinaryMask(vessels.astype(np.uint8)),
           BinaryMask(fov.astype(np.uint8)))


# Samples the points of a vessel made of two joined quadratic Bezier segments
def _vessel_curve(rng, center, radius):
    # End points on the FOV boundary
    angles = rng.uniform(0, 2*np.pi, size=2)
    ends = center+radius*np.stack([np.sin(angles), np.cos(angles)], axis=1)

    # Junction and first control point inside the FOV
    inner = _disc_points(rng, 2, 0.6*radius)+center
    joint, ctrl1 = inner

    # Mirror the first control point for a smooth joint
    ctrl2 = 2*joint-ctrl1
    ctrl2 = center+np.clip(ctrl2-center, -0.7*radius, 0.7*radius)

    # Sample both segments densely
    t = np.linspace(0, 1, int(8*radius))[:, np.newaxis]
    seg1 = (1-t)**2*ends[0]+2*(1-t)*t*ctrl1+t**2*joint
    seg2 = (1-t)**2*joint+2*(1-t)*t*ctrl2+t**2*ends[1]
    return(np.concatenate([seg1, seg2]))


# Draws points uniformly from a disc around the origin
def _disc_points(rng, n, radius):
    r = radius*np.sqrt(rng.uniform(0, 1, size=n))
    phi = rng.uniform(0, 2*np.pi, size=n)
    return(np.stack([r*np.sin(phi), r*np.cos(phi)], axis=1))


# Marks the pixels hit by the given (row, col) points
def _rasterize(points, size):
    idx = np.clip(round_half_away(points), 0, size-1).astype(int)
    mask = np.zeros((size, size), dtype=bool)
    mask[idx[:, 0], idx[:, 1]] = True
    return(mask)
