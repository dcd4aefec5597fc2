"""Initial thresholds from intensity clustering.

Clustering runs on the distinct intensities weighted by their pixel
counts, so results do not depend on pixel order. Images with more than
MAX_BINS distinct intensities are merged into that many equal-width
bins, each represented by the mean of its values.
"""

from dataclasses import dataclass

import numpy as np

from troftools.core import _as_grid, check_increasing
from troftools.energy import Codebook
from troftools.trof import ThresholdVector

# Thresholds are kept this far inside (0, 1).
EDGE_MARGIN = 1e-6

MAX_BINS = 1024


@dataclass(frozen=True)
class FcmParams:
    K: int
    iterations: int = 100
    fuzzifier: float = 2.0
    seed: int = 0
    tol: float = 0.0

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 2:
            raise ValueError(f'K must be an integer of at least 2, got {self.K}.')
        if not self.fuzzifier > 1:
            raise ValueError(f'fuzzifier must exceed 1, got {self.fuzzifier}.')
        if self.iterations < 1:
            raise ValueError(f'iterations must be positive, got {self.iterations}.')
        if self.tol < 0:
            raise ValueError(f'tol must be non-negative, got {self.tol}.')


def intensity_histogram(f, K, max_bins=MAX_BINS):
    """Distinct values and their counts, checking at least K exist."""
    if K < 2:
        raise ValueError(f'K must be at least 2, got {K}.')
    values, counts = np.unique(_as_grid(f).ravel(), return_counts=True)
    if values.size < K:
        raise ValueError(f'Image has {values.size} distinct intensities, '
                         f'fewer than the {K} clusters requested.')
    counts = counts.astype(np.float64)
    if max_bins and values.size > max_bins:
        bins = np.clip((values * max_bins).astype(np.int64), 0, max_bins - 1)
        sums = np.bincount(bins, weights=counts * values, minlength=max_bins)
        totals = np.bincount(bins, weights=counts, minlength=max_bins)
        used = totals > 0
        if np.count_nonzero(used) >= K:
            values, counts = sums[used] / totals[used], totals[used]
    return values, counts


def initial_centers(values, counts, K, seed=0):
    """Pixel values at the quantiles (i + 0.5) / K.

    Falls back to K distinct values drawn with the seed when quantiles
    repeat.
    """
    cdf = np.cumsum(counts) / np.sum(counts)
    levels = (np.arange(K) + 0.5) / K
    centers = values[np.searchsorted(cdf, levels, side='left')]
    if np.unique(centers).size < K:
        rng = np.random.default_rng(seed)
        centers = np.sort(rng.choice(values, size=K, replace=False))
    return centers.astype(np.float64)


def fcm_centers(f, params):
    """Scalar fuzzy C-means cluster centres."""
    values, counts = intensity_histogram(f, params.K)
    centers = initial_centers(values, counts, params.K, params.seed)
    exponent = 2.0 / (params.fuzzifier - 1.0)

    for _ in range(params.iterations):
        dist = np.abs(values[:, np.newaxis] - centers[np.newaxis, :])
        with np.errstate(divide='ignore', invalid='ignore'):
            inverse = dist ** -exponent
            member = inverse / inverse.sum(axis=1, keepdims=True)
        # A value sitting on a centre belongs to it alone.
        hits = np.isinf(inverse)
        crisp = hits.any(axis=1)
        member[crisp] = hits[crisp] / hits[crisp].sum(axis=1, keepdims=True)

        weights = counts[:, np.newaxis] * member ** params.fuzzifier
        updated = (weights * values[:, np.newaxis]).sum(axis=0) / weights.sum(axis=0)
        shift = np.max(np.abs(updated - centers))
        centers = updated
        if params.tol > 0 and shift <= params.tol:
            break

    return Codebook(np.clip(centers, 0.0, 1.0))


def kmeans_centers(f, K, iterations=100, seed=0):
    """Lloyd's algorithm on the intensity histogram."""
    values, counts = intensity_histogram(f, K)
    centers = initial_centers(values, counts, K, seed)
    labels = None
    for _ in range(iterations):
        # argmin keeps the lower index on ties.
        updated_labels = np.argmin(np.abs(values[:, np.newaxis] - centers), axis=1)
        if labels is not None and np.array_equal(updated_labels, labels):
            break
        labels = updated_labels
        sums = np.bincount(labels, weights=counts * values, minlength=K)
        sizes = np.bincount(labels, weights=counts, minlength=K)
        occupied = sizes > 0
        centers = centers.copy()
        centers[occupied] = sums[occupied] / sizes[occupied]
    return Codebook(np.clip(centers, 0.0, 1.0))


def thresholds_from_centers(centers):
    """Midpoints of adjacent centres, kept strictly inside (0, 1)."""
    centers = check_increasing(getattr(centers, 'values', centers), name='centres')
    taus = 0.5 * (centers[:-1] + centers[1:])
    return ThresholdVector.validated(np.clip(taus, EDGE_MARGIN, 1.0 - EDGE_MARGIN))


def initial_thresholds(f, K, method='fcm', taus=None, seed=0, iterations=100,
                       fuzzifier=2.0):
    """Initial thresholds by clustering ('fcm', 'kmeans') or given explicitly."""
    if method == 'explicit':
        if taus is None:
            raise ValueError('Explicit initialisation requires thresholds.')
        taus = ThresholdVector.validated(taus)
        if taus.K != K:
            raise ValueError(f'{K - 1} thresholds required for K={K}, '
                             f'{len(taus)} provided.')
        return taus
    if method == 'fcm':
        centers = fcm_centers(f, FcmParams(K=K, iterations=iterations,
                                           fuzzifier=fuzzifier, seed=seed))
    elif method == 'kmeans':
        centers = kmeans_centers(f, K, iterations=iterations, seed=seed)
    else:
        raise ValueError(f'Unknown initialisation: {method}.')
    return thresholds_from_centers(centers)
