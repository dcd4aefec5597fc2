"""Segmentation accuracy and DICE scores against a ground truth."""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from troftools.core import PhasePartition, _check_same_shape, label_means


@dataclass(frozen=True, eq=False)
class MetricReport:
    sa: float
    dice: np.ndarray
    # matched_permutation[pred_label] is the truth label it was scored as.
    matched_permutation: np.ndarray
    matching: str = 'intensity'


def segmentation_accuracy(pred, truth):
    """Fraction of pixels whose labels agree."""
    _check_same_shape(pred.labels, truth.labels)
    return float(np.mean(pred.labels == truth.labels))


def dice_scores(pred, truth):
    """Per-phase 2|A & B| / (|A| + |B|), 1 when both phases are empty."""
    _check_same_shape(pred.labels, truth.labels)
    if pred.K != truth.K:
        raise ValueError(f'Phase counts differ: {pred.K} != {truth.K}.')
    scores = np.ones(pred.K)
    for i in range(pred.K):
        a = pred.phase_mask(i).bits
        b = truth.phase_mask(i).bits
        total = np.count_nonzero(a) + np.count_nonzero(b)
        if total:
            scores[i] = 2.0 * np.count_nonzero(a & b) / total
    return scores


def overlap_matrix(pred, truth, size):
    _check_same_shape(pred.labels, truth.labels)
    flat = pred.labels.ravel() * size + truth.labels.ravel()
    return np.bincount(flat, minlength=size * size).reshape(size, size)


def label_positions(partition, image=None):
    """Intensity of each label: its mean over image, else i / (K - 1).

    Empty labels are interpolated from their non-empty neighbours so the
    positions stay ordered.
    """
    K = partition.K
    nominal = np.arange(K) / (K - 1) if K > 1 else np.zeros(1)
    if image is None:
        return nominal
    means, counts = label_means(image, partition.labels, K)
    used = np.flatnonzero(counts)
    if used.size == 0:
        return nominal
    return np.interp(np.arange(K), used, means[used])


def _ordered_assignment(a, b):
    """Increasing map of a into b, len(a) <= len(b), minimising sum |a - b|."""
    m, n = a.size, b.size
    best = np.full((m + 1, n + 1), np.inf)
    best[0, :] = 0.0
    for i in range(1, m + 1):
        for j in range(i, n + 1):
            best[i, j] = min(best[i, j - 1],
                             best[i - 1, j - 1] + abs(a[i - 1] - b[j - 1]))
    mapping = np.empty(m, dtype=np.int64)
    i, j = m, n
    while i > 0:
        if j > i and best[i, j] == best[i, j - 1]:
            j -= 1
        else:
            mapping[i - 1] = j - 1
            i -= 1
            j -= 1
    return mapping


def _intensity_matching(pred, truth, image=None):
    pred_pos = label_positions(pred, image)
    truth_pos = label_positions(truth, image)
    if pred.K <= truth.K:
        return _ordered_assignment(pred_pos, truth_pos)
    # Surplus predicted labels are sent past the last truth label.
    partner = _ordered_assignment(truth_pos, pred_pos)
    permutation = np.full(pred.K, -1, dtype=np.int64)
    permutation[partner] = np.arange(truth.K)
    unmatched = np.flatnonzero(permutation < 0)
    permutation[unmatched] = truth.K + np.arange(unmatched.size)
    return permutation


def match_labels(pred, truth, method='overlap', image=None):
    """Map each predicted label to a truth label.

    'overlap' maximises the total number of agreeing pixels with an
    exact assignment. 'intensity' keeps the label order and pairs labels
    whose mean intensities over image are closest; without an image the
    labels sit at i / (K - 1), as in a label image. With equal phase
    counts it is the identity. Predicted labels without a partner are
    sent past the last truth label.
    """
    _check_same_shape(pred.labels, truth.labels)
    if method == 'intensity':
        return _intensity_matching(pred, truth, image)
    if method != 'overlap':
        raise ValueError(f'Unknown matching method: {method}.')
    size = max(pred.K, truth.K)
    overlap = overlap_matrix(pred, truth, size)
    rows, cols = linear_sum_assignment(overlap, maximize=True)
    permutation = np.empty(size, dtype=np.int64)
    permutation[rows] = cols
    return permutation[:pred.K]


def apply_matching(pred, permutation, K):
    return pred.relabel(permutation, K)


def evaluate(pred, truth, matching='intensity', image=None):
    """SA and DICE after matching pred labels onto truth labels."""
    permutation = match_labels(pred, truth, method=matching, image=image)
    K = max(truth.K, int(permutation.max()) + 1)
    matched = apply_matching(pred, permutation, K)
    padded_truth = PhasePartition(truth.labels, K)
    return MetricReport(sa=segmentation_accuracy(matched, padded_truth),
                        dice=dice_scores(matched, padded_truth),
                        matched_permutation=permutation,
                        matching=matching)
