"""Segmentation energies and exhaustive oracles for tiny grids."""

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from troftools.core import (BinaryMask, PhasePartition, _as_grid,
                            _check_same_shape, label_means, perimeter,
                            pointwise_norm)
from troftools.tv_variants import TvVariant

# Largest grid (in pixels) the exhaustive mask search accepts.
MAX_BRUTE_FORCE_PIXELS = 16

# Largest number of labellings the exhaustive partition search accepts.
MAX_EXHAUSTIVE_LABELLINGS = 2 ** 21

TIE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Codebook:
    """Phase intensities, sorted at construction."""

    values: np.ndarray

    def __post_init__(self):
        values = np.sort(np.asarray(self.values, dtype=np.float64).ravel())
        if values.size == 0:
            raise ValueError('Codebook must not be empty.')
        if np.any(np.diff(values) <= 0):
            raise ValueError(f'Codebook values must be distinct: {values}.')
        if values[0] < 0 or values[-1] > 1:
            raise ValueError(f'Codebook values must lie in [0, 1]: {values}.')
        values.flags.writeable = False
        object.__setattr__(self, 'values', values)

    def __len__(self):
        return self.values.size

    def __iter__(self):
        return iter(self.values.tolist())

    @property
    def K(self):
        return self.values.size


@dataclass(frozen=True, eq=False)
class PcmsWeights:
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).ravel()
        if np.any(values <= 0):
            raise ValueError(f'Weights must be positive: {values}.')
        values.flags.writeable = False
        object.__setattr__(self, 'values', values)

    def __len__(self):
        return self.values.size


def _codebook_values(codebook):
    return np.asarray(getattr(codebook, 'values', codebook), dtype=np.float64)


def energy_single(mask, tau, f, mu, variant=TvVariant.ANISOTROPIC):
    """Per(mask) + mu * sum over mask of (tau - f)."""
    mask = _as_grid(mask, dtype=bool)
    f = _as_grid(f)
    _check_same_shape(mask, f)
    return perimeter(mask, variant) + mu * float(np.sum(tau - f[mask]))


def energy_trof(masks, taus, f, mu, variant=TvVariant.ANISOTROPIC):
    """Sum of single energies over a nested family of masks."""
    masks = [_as_grid(mask, dtype=bool) for mask in masks]
    taus = np.asarray(getattr(taus, 'taus', taus), dtype=np.float64)
    if len(masks) != taus.size:
        raise ValueError(f'{taus.size} masks required, {len(masks)} provided.')
    if np.any(np.diff(taus) < 0):
        raise ValueError(f'Thresholds must be increasing: {taus}.')
    for outer, inner in zip(masks, masks[1:]):
        if np.any(inner & ~outer):
            raise ValueError('Masks are not nested.')
    return sum(energy_single(mask, tau, f, mu, variant)
               for mask, tau in zip(masks, taus))


def energy_chan_vese(mask, m0, m1, f, lam, variant=TvVariant.ANISOTROPIC):
    """Two-phase energy with m1 inside the mask and m0 outside."""
    mask = _as_grid(mask, dtype=bool)
    f = _as_grid(f)
    _check_same_shape(mask, f)
    data = np.sum((m1 - f[mask]) ** 2) + np.sum((m0 - f[~mask]) ** 2)
    return perimeter(mask, variant) + lam * float(data)


def _phase_misfit(partition, codebook, f):
    """Squared misfit of f against the codebook, summed per phase."""
    values = _codebook_values(codebook)
    f = _as_grid(f)
    labels = partition.labels
    _check_same_shape(labels, f)
    if values.size != partition.K:
        raise ValueError(f'Codebook has {values.size} values for '
                         f'{partition.K} phases.')
    residual = (values[labels] - f) ** 2
    return np.bincount(labels.ravel(), weights=residual.ravel(),
                       minlength=partition.K)


def energy_pcms(partition, codebook, f, lam, variant=TvVariant.ANISOTROPIC):
    """Half the sum of phase perimeters plus lam times the data misfit."""
    misfit = _phase_misfit(partition, codebook, f)
    perimeters = sum(perimeter(partition.labels == i, variant)
                     for i in range(partition.K))
    return 0.5 * perimeters + lam * float(np.sum(misfit))


def energy_pcms_v(partition, codebook, f, weights, variant=TvVariant.ANISOTROPIC):
    """Perimeters of the unions Sigma_i plus per-phase weighted misfit."""
    weights = np.asarray(getattr(weights, 'values', weights), dtype=np.float64)
    if weights.size != partition.K:
        raise ValueError(f'{partition.K} weights required, {weights.size} provided.')
    misfit = _phase_misfit(partition, codebook, f)
    perimeters = sum(perimeter(partition.labels >= i, variant)
                     for i in range(1, partition.K))
    return perimeters + float(np.sum(weights * misfit))


def lambda_from_mu(mu, m0, m1):
    """Chan-Vese weight matching the thresholding energy at mu."""
    if not m1 > m0:
        raise ValueError(f'Means must satisfy m1 > m0, got m0={m0}, m1={m1}.')
    return mu / (2.0 * (m1 - m0))


def pcms_v_weights(means, mu):
    means = np.asarray(getattr(means, 'values', means), dtype=np.float64)
    if means.size < 2:
        raise ValueError('At least two means required.')
    gaps = np.diff(means)
    if np.any(gaps <= 0):
        raise ValueError(f'Means must be strictly increasing: {means}.')
    half = mu / (2.0 * gaps)
    weights = np.zeros(means.size)
    weights[:-1] += half
    weights[1:] += half
    return PcmsWeights(weights)


def _all_masks(n_pixels):
    """Every mask as a row, pixel 0 in the most significant bit."""
    idx = np.arange(2 ** n_pixels, dtype=np.int64)
    shifts = np.arange(n_pixels - 1, -1, -1, dtype=np.int64)
    return ((idx[:, np.newaxis] >> shifts) & 1).astype(bool)


def _batch_perimeters(masks, variant):
    """Perimeters of a stack of masks with shape (M, H, W)."""
    chi = masks.astype(np.float64)
    grad = np.zeros((2,) + chi.shape)
    grad[0, :, :, :-1] = chi[:, :, 1:] - chi[:, :, :-1]
    grad[1, :, :-1, :] = chi[:, 1:, :] - chi[:, :-1, :]
    return pointwise_norm(grad, variant).sum(axis=(1, 2))


def brute_force_min_energy(f, tau, mu, variant=TvVariant.ANISOTROPIC):
    """Exact minimiser of energy_single over every mask of a tiny grid.

    Ties within 1e-12 go to the lexicographically smallest mask in
    row-major pixel order.
    """
    f = _as_grid(f)
    if f.size > MAX_BRUTE_FORCE_PIXELS:
        raise ValueError(f'Grid has {f.size} pixels, brute force supports at '
                         f'most {MAX_BRUTE_FORCE_PIXELS}.')
    bits = _all_masks(f.size)
    masks = bits.reshape((-1,) + f.shape)
    energies = _batch_perimeters(masks, variant) + mu * (bits @ (tau - f.ravel()))
    best = int(np.flatnonzero(energies <= energies.min() + TIE_TOL)[0])
    return BinaryMask(masks[best]), float(energies[best])


def all_mask_energies(f, tau, mu, variant=TvVariant.ANISOTROPIC):
    """Masks and energies of every subset, in brute force order."""
    f = _as_grid(f)
    if f.size > MAX_BRUTE_FORCE_PIXELS:
        raise ValueError(f'Grid has {f.size} pixels, brute force supports at '
                         f'most {MAX_BRUTE_FORCE_PIXELS}.')
    bits = _all_masks(f.size)
    masks = bits.reshape((-1,) + f.shape)
    return masks, _batch_perimeters(masks, variant) + mu * (bits @ (tau - f.ravel()))


def energy_pcms_exhaustive_min(f, codebook, lam=None, variant=TvVariant.ANISOTROPIC,
                               weights=None):
    """Minimum PCMS (or PCMS-V when weights are given) over all labellings.

    Returns the minimising partition and its energy.
    """
    f = _as_grid(f)
    K = len(_codebook_values(codebook))
    if K ** f.size > MAX_EXHAUSTIVE_LABELLINGS:
        raise ValueError(f'{K}^{f.size} labellings exceed the exhaustive limit.')
    best, best_energy = None, np.inf
    for labels in product(range(K), repeat=f.size):
        partition = PhasePartition(np.reshape(labels, f.shape), K)
        energy = _partition_energy(partition, codebook, f, lam, variant, weights)
        if energy < best_energy - TIE_TOL:
            best, best_energy = partition, energy
    return best, best_energy


def _partition_energy(partition, codebook, f, lam, variant, weights):
    if weights is not None:
        return energy_pcms_v(partition, codebook, f, weights, variant)
    return energy_pcms(partition, codebook, f, lam, variant)


@dataclass
class PartialMinimizerReport:
    passed: bool
    means_ok: bool
    mean_error: float
    energy: float
    # (row, col, from_label, to_label, energy decrease) per improving move.
    violations: list = field(default_factory=list)


def is_partial_minimizer(partition, codebook, f, lam=None,
                         variant=TvVariant.ANISOTROPIC,
                         neighborhood='single', weights=None, tol=1e-9):
    """Check the codebook is the phase means and no local move helps.

    neighborhood='single' tries every single-pixel relabelling,
    'exhaustive' compares against the best labelling of a grid of at
    most 3x3 pixels. With weights the PCMS-V energy is used, otherwise
    PCMS with weight lam.
    """
    f = _as_grid(f)
    values = _codebook_values(codebook)
    if weights is None and lam is None:
        raise ValueError('Either lam or weights is required.')
    means, counts = label_means(f, partition.labels, partition.K)
    occupied = counts > 0
    mean_error = float(np.max(np.abs(means[occupied] - values[occupied]),
                              initial=0.0))
    means_ok = mean_error <= tol

    energy = _partition_energy(partition, codebook, f, lam, variant, weights)
    violations = []
    if neighborhood == 'single':
        labels = partition.labels
        for row, col in np.ndindex(labels.shape):
            for label in range(partition.K):
                if label == labels[row, col]:
                    continue
                moved = labels.copy()
                moved[row, col] = label
                trial = _partition_energy(PhasePartition(moved, partition.K),
                                          codebook, f, lam, variant, weights)
                if trial < energy - tol:
                    violations.append((row, col, int(labels[row, col]), label,
                                       energy - trial))
    elif neighborhood == 'exhaustive':
        if f.size > 9:
            raise ValueError('Exhaustive search supports grids of at most 3x3.')
        best, best_energy = energy_pcms_exhaustive_min(f, codebook, lam, variant,
                                                       weights)
        if best_energy < energy - tol:
            for row, col in zip(*np.nonzero(best.labels != partition.labels)):
                violations.append((int(row), int(col),
                                   int(partition.labels[row, col]),
                                   int(best.labels[row, col]),
                                   energy - best_energy))
    else:
        raise ValueError(f'Unknown neighborhood: {neighborhood}.')

    return PartialMinimizerReport(passed=means_ok and not violations,
                                  means_ok=means_ok, mean_error=mean_error,
                                  energy=energy, violations=violations)
