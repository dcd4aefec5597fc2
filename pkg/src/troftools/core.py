"""Images, masks and partitions plus the discrete TV operators.

All images are two dimensional arrays indexed [row, column] with unit
pixel area and unit edge length, so integrals over the domain become
plain sums. Differences are forward differences that vanish at the
last row and column (Neumann boundary), and the divergence is the
exact negative adjoint of the gradient.
"""

from dataclasses import dataclass

import numpy as np

from troftools.tv_variants import TvVariant


def _as_grid(values, dtype=np.float64):
    """Return values as a 2D array, promoting 1D signals to one row."""
    if isinstance(values, (GrayImage, BinaryMask, PhasePartition)):
        values = values.array
    array = np.asarray(values, dtype=dtype)
    if array.ndim == 1:
        array = array[np.newaxis, :]
    if array.ndim != 2:
        raise ValueError(f'Expected a 2D grid, got shape {array.shape}.')
    return array


def _check_same_shape(a, b):
    if a.shape != b.shape:
        raise ValueError(f'Shape mismatch: {a.shape} != {b.shape}.')


def _frozen(array):
    array = np.array(array, copy=True)
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Grid of intensities in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        data = _as_grid(self.data)
        if data.size == 0:
            raise ValueError('Image must have at least one pixel.')
        if not np.all(np.isfinite(data)):
            raise ValueError('Image contains non-finite values.')
        if data.min() < 0 or data.max() > 1:
            raise ValueError(
                f'Intensities must lie in [0, 1], got [{data.min()}, {data.max()}].')
        object.__setattr__(self, 'data', _frozen(data))

    @classmethod
    def from_array(cls, values, clip=False):
        data = _as_grid(values)
        if clip:
            data = np.clip(data, 0.0, 1.0)
        return cls(data)

    @classmethod
    def from_flat(cls, width, height, values):
        """Build an image from a row-major sequence."""
        values = np.asarray(values, dtype=np.float64)
        if values.size != width * height:
            raise ValueError(
                f'{width * height} values required, {values.size} provided.')
        return cls(values.reshape(height, width))

    @property
    def array(self):
        return self.data

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def shape(self):
        return self.data.shape

    def stretch(self):
        """Linearly rescale onto [0, 1]; constant images are unchanged."""
        lo, hi = self.data.min(), self.data.max()
        if hi <= lo:
            return self
        return GrayImage(np.clip((self.data - lo) / (hi - lo), 0.0, 1.0))


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """A discrete subset of the image domain."""

    bits: np.ndarray

    def __post_init__(self):
        bits = _as_grid(self.bits, dtype=bool)
        object.__setattr__(self, 'bits', _frozen(bits))

    @property
    def array(self):
        return self.bits

    @property
    def width(self):
        return self.bits.shape[1]

    @property
    def height(self):
        return self.bits.shape[0]

    @property
    def shape(self):
        return self.bits.shape

    def count(self):
        return int(np.count_nonzero(self.bits))

    def is_empty(self):
        return not self.bits.any()

    def issubset(self, other):
        other = _as_grid(other, dtype=bool)
        _check_same_shape(self.bits, other)
        return not np.any(self.bits & ~other)

    def complement(self):
        return BinaryMask(~self.bits)


@dataclass(frozen=True, eq=False)
class PhasePartition:
    """Per-pixel labels 0..K-1 of nested super-level sets."""

    labels: np.ndarray
    K: int

    def __post_init__(self):
        labels = _as_grid(self.labels, dtype=np.int64)
        if self.K < 1:
            raise ValueError(f'Phase count must be at least 1, got {self.K}.')
        if labels.min() < 0 or labels.max() > self.K - 1:
            raise ValueError(f'Labels must lie in [0, {self.K - 1}].')
        object.__setattr__(self, 'labels', _frozen(labels))
        object.__setattr__(self, 'K', int(self.K))

    @classmethod
    def from_masks(cls, masks, shape=None):
        """Build a partition from nested masks Sigma_1 >= ... >= Sigma_{K-1}."""
        masks = [_as_grid(mask, dtype=bool) for mask in masks]
        if not masks:
            if shape is None:
                raise ValueError('Shape required for a single-phase partition.')
            return cls(np.zeros(shape, dtype=np.int64), 1)
        for outer, inner in zip(masks, masks[1:]):
            _check_same_shape(outer, inner)
            if np.any(inner & ~outer):
                raise ValueError('Masks are not nested.')
        labels = np.sum(masks, axis=0, dtype=np.int64)
        return cls(labels, len(masks) + 1)

    @property
    def array(self):
        return self.labels

    @property
    def width(self):
        return self.labels.shape[1]

    @property
    def height(self):
        return self.labels.shape[0]

    @property
    def shape(self):
        return self.labels.shape

    def phase_mask(self, i):
        return BinaryMask(self.labels == i)

    def level_mask(self, i):
        """Sigma_i, the union of phases i..K-1."""
        return BinaryMask(self.labels >= i)

    def masks(self):
        return [self.level_mask(i) for i in range(1, self.K)]

    def phase_sizes(self):
        return np.bincount(self.labels.ravel(), minlength=self.K)

    def relabel(self, mapping, K=None):
        """Apply mapping[old_label] -> new_label."""
        mapping = np.asarray(mapping, dtype=np.int64)
        return PhasePartition(mapping[self.labels],
                              self.K if K is None else K)


def gradient(u):
    """Forward differences, returned with shape (2, H, W) as [dx, dy]."""
    u = _as_grid(u)
    grad = np.zeros((2,) + u.shape)
    grad[0, :, :-1] = u[:, 1:] - u[:, :-1]
    grad[1, :-1, :] = u[1:, :] - u[:-1, :]
    return grad


def divergence(p):
    """Negative adjoint of gradient."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 3 or p.shape[0] != 2:
        raise ValueError(f'Expected a (2, H, W) field, got shape {p.shape}.')
    px, py = p[0], p[1]
    div = np.zeros(p.shape[1:])
    div[:, :-1] += px[:, :-1]
    div[:, 1:] -= px[:, :-1]
    div[:-1, :] += py[:-1, :]
    div[1:, :] -= py[:-1, :]
    return div


def pointwise_norm(grad, variant):
    if TvVariant.parse(variant) is TvVariant.ISOTROPIC:
        return np.sqrt(grad[0] ** 2 + grad[1] ** 2)
    return np.abs(grad[0]) + np.abs(grad[1])


def tv(u, variant=TvVariant.ISOTROPIC):
    return float(np.sum(pointwise_norm(gradient(u), variant)))


def perimeter(mask, variant=TvVariant.ISOTROPIC):
    """Perimeter of a set as the TV of its indicator."""
    return tv(_as_grid(mask, dtype=bool).astype(np.float64), variant)


def mean_over(f, mask):
    """Mean of f on a set, 0 for the empty set."""
    f = _as_grid(f)
    mask = _as_grid(mask, dtype=bool)
    _check_same_shape(f, mask)
    count = np.count_nonzero(mask)
    if count == 0:
        return 0.0
    return float(np.sum(f[mask]) / count)


def label_means(f, labels, K):
    """Per-label means of f and pixel counts; empty labels get mean 0."""
    f = _as_grid(f)
    labels = _as_grid(labels, dtype=np.int64)
    _check_same_shape(f, labels)
    counts = np.bincount(labels.ravel(), minlength=K)
    sums = np.bincount(labels.ravel(), weights=f.ravel(), minlength=K)
    means = np.divide(sums, counts, out=np.zeros(K), where=counts > 0)
    return means, counts


def threshold_set(u, tau):
    """Strict super-level set {u > tau}."""
    return BinaryMask(_as_grid(u) > tau)


def check_increasing(values, name='thresholds'):
    values = np.asarray(getattr(values, 'taus', values), dtype=np.float64)
    if values.ndim != 1:
        raise ValueError(f'{name} must be one dimensional.')
    if np.any(np.diff(values) <= 0):
        raise ValueError(f'{name} must be strictly increasing: {values}.')
    return values


def partition_from_thresholds(u, taus):
    """Label each pixel with the number of thresholds it exceeds."""
    u = _as_grid(u)
    taus = check_increasing(taus)
    # Count of thresholds strictly below u, so ties go to the lower phase.
    labels = np.searchsorted(taus, u, side='left')
    return PhasePartition(labels, len(taus) + 1)
