"""Base phantom class."""

from dataclasses import dataclass

import numpy as np

from troftools.core import BinaryMask, GrayImage, PhasePartition, label_means
from troftools.energy import Codebook


@dataclass(frozen=True)
class NoiseSpec:
    """Additive noise; only Gaussian noise is supported."""

    variance: float = 0.0
    mean: float = 0.0
    seed: int = 0
    kind: str = 'gaussian'

    def __post_init__(self):
        if self.kind != 'gaussian':
            raise ValueError(f'Unsupported noise kind: {self.kind}.')
        if self.variance < 0:
            raise ValueError(f'variance must be non-negative, got {self.variance}.')

    def sample(self, rng, shape):
        if self.variance == 0 and self.mean == 0:
            return np.zeros(shape)
        return rng.normal(self.mean, np.sqrt(self.variance), shape)


@dataclass(frozen=True, eq=False)
class GroundTruth:
    partition: PhasePartition
    codebook: Codebook
    # Pixels removed from the observed image, if any.
    missing: BinaryMask | None = None

    def __post_init__(self):
        if len(self.codebook) != self.partition.K:
            raise ValueError(f'Codebook has {len(self.codebook)} values for '
                             f'{self.partition.K} phases.')

    @property
    def K(self):
        return self.partition.K


class BasePhantom:
    """Base phantom initialised with a size and a noise model.

    Subclasses implement `clean` returning a noise-free image and its
    intensity-ordered labels. `generate` adds seeded noise, clamps to
    [0, 1] and optionally stretches the result onto [0, 1].
    """

    def __init__(self, name, width, height, noise=None, stretch=False,
                 debug=False):
        if width < 1 or height < 1:
            raise ValueError(f'Invalid phantom size {width}x{height}.')

        # Set class attributes.
        self.name = name
        self.width = width
        self.height = height
        self.noise = noise if noise is not None else NoiseSpec()
        self.stretch = stretch
        self.debug = debug

    @property
    def shape(self):
        return (self.height, self.width)

    def grid(self):
        """Pixel centre coordinates scaled so the image spans [0, 1]."""
        rows, cols = np.mgrid[0:self.height, 0:self.width].astype(np.float64)
        return (rows + 0.5) / self.height, (cols + 0.5) / self.width

    def clean(self, rng):
        raise NotImplementedError

    def degrade(self, noisy, rng):
        """Hook applied after noise; returns the image and a missing mask."""
        return noisy, None

    def generate(self):
        rng = np.random.default_rng(self.noise.seed)
        clean, labels = self.clean(rng)
        clean = np.clip(clean, 0.0, 1.0)
        noisy = np.clip(clean + self.noise.sample(rng, clean.shape), 0.0, 1.0)
        noisy, missing = self.degrade(noisy, rng)

        if self.stretch:
            lo, hi = noisy.min(), noisy.max()
            if hi > lo:
                noisy = np.clip((noisy - lo) / (hi - lo), 0.0, 1.0)
                clean = np.clip((clean - lo) / (hi - lo), 0.0, 1.0)

        labels = self.compact_labels(labels)
        K = int(labels.max()) + 1
        codebook, _ = label_means(clean, labels, K)
        truth = GroundTruth(partition=PhasePartition(labels, K),
                            codebook=Codebook(codebook),
                            missing=missing)
        if self.debug:
            print(f'{self.name}: {self.width}x{self.height}, K={K}, '
                  f'codebook={np.round(codebook, 4).tolist()}')
        return GrayImage(noisy), truth

    def compact_labels(self, labels):
        """Renumber labels 0..K-1 keeping their order, dropping unused ones."""
        _, compact = np.unique(labels, return_inverse=True)
        return compact.reshape(labels.shape)
