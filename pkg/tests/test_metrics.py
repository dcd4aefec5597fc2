import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from troftools.core import PhasePartition
from troftools.metrics import (apply_matching, dice_scores, evaluate,
                               label_positions,
                               match_labels, overlap_matrix,
                               segmentation_accuracy)


def partition(labels, K):
    return PhasePartition(np.array(labels), K)


def test_identical_partitions():
    truth = partition([[0, 1, 2], [2, 1, 0]], 3)
    assert segmentation_accuracy(truth, truth) == 1.0
    assert_allclose(dice_scores(truth, truth), [1.0, 1.0, 1.0])


def test_accuracy_and_dice():
    pred = partition([[0, 0, 1, 1]], 2)
    truth = partition([[0, 1, 1, 1]], 2)
    assert segmentation_accuracy(pred, truth) == pytest.approx(0.75)
    assert_allclose(dice_scores(pred, truth), [2 / 3, 0.8])


def test_dice_empty_phase_scores_one():
    pred = partition([[0, 0]], 3)
    truth = partition([[0, 0]], 3)
    assert_allclose(dice_scores(pred, truth), [1.0, 1.0, 1.0])


def test_dice_rejects_phase_count_mismatch():
    with pytest.raises(ValueError):
        dice_scores(partition([[0, 1]], 2), partition([[0, 1]], 3))


def test_shape_mismatch():
    with pytest.raises(ValueError):
        segmentation_accuracy(partition([[0, 1]], 2), partition([[0, 1, 1]], 2))


def test_overlap_matching_undoes_permutation():
    truth = partition([[0, 0, 1, 1, 2, 2]], 3)
    pred = partition([[2, 2, 0, 0, 1, 1]], 3)
    assert_array_equal(overlap_matrix(pred, truth, 3),
                       [[0, 2, 0], [0, 0, 2], [2, 0, 0]])
    permutation = match_labels(pred, truth)
    assert_array_equal(permutation, [1, 2, 0])
    assert_array_equal(apply_matching(pred, permutation, 3).labels, truth.labels)
    report = evaluate(pred, truth, matching='overlap')
    assert report.sa == 1.0
    assert evaluate(pred, truth).sa == 0.0


def test_evaluate_pads_missing_phases():
    truth = partition([[0, 0, 1, 1, 2, 2]], 3)
    pred = partition([[0, 0, 1, 1, 1, 1]], 2)
    report = evaluate(pred, truth)
    # Without an image labels sit at i / (K - 1): 0 -> 0 and 1 -> 2.
    assert_array_equal(report.matched_permutation, [0, 2])
    assert report.sa == pytest.approx(4 / 6)
    assert_allclose(report.dice, [1.0, 0.0, 2 / 3])
    assert report.matching == 'intensity'


def test_evaluate_with_extra_predicted_phase():
    truth = partition([[0, 0, 1, 1]], 2)
    pred = partition([[0, 1, 2, 2]], 3)
    report = evaluate(pred, truth, matching='overlap')
    assert report.dice.size == 3
    assert report.sa == pytest.approx(0.75)


def test_unknown_matching():
    with pytest.raises(ValueError):
        match_labels(partition([[0]], 1), partition([[0]], 1), method='greedy')


def test_intensity_matching_with_fewer_predicted_phases():
    image = np.array([[0.1, 0.4, 0.6, 0.6, 0.9]])
    truth = partition([[0, 1, 2, 2, 3]], 4)
    pred = partition([[0, 1, 1, 1, 2]], 3)
    assert_allclose(label_positions(pred, image), [0.1, 1.6 / 3, 0.9])
    assert_array_equal(match_labels(pred, truth, 'intensity', image=image),
                       [0, 2, 3])
    report = evaluate(pred, truth, image=image)
    assert report.sa == pytest.approx(0.8)
    assert_allclose(report.dice, [1.0, 0.0, 0.8, 1.0])
    identity = apply_matching(pred, [0, 1, 2], 4)
    assert segmentation_accuracy(identity, truth) == pytest.approx(0.4)


def test_intensity_matching_with_extra_predicted_phase():
    image = np.array([[0.1, 0.45, 0.55, 0.9]])
    truth = partition([[0, 1, 1, 2]], 3)
    pred = partition([[0, 1, 2, 3]], 4)
    permutation = match_labels(pred, truth, 'intensity', image=image)
    assert sorted(permutation[[0, 3]]) == [0, 2]
    assert permutation.max() == 3
    report = evaluate(pred, truth, image=image)
    assert report.dice.size == 4
    assert report.sa == pytest.approx(0.75)


def test_intensity_matching_is_identity_for_equal_phase_counts():
    image = np.array([[0.1, 0.2, 0.8]])
    pred = partition([[0, 1, 1]], 2)
    truth = partition([[0, 0, 1]], 2)
    assert_array_equal(match_labels(pred, truth, 'intensity', image=image), [0, 1])


def test_empty_label_positions_are_interpolated():
    image = np.array([[0.2, 0.8]])
    positions = label_positions(partition([[0, 2]], 3), image)
    assert_allclose(positions, [0.2, 0.5, 0.8])


def test_dice_is_symmetric():
    rng = np.random.default_rng(11)
    a = partition(rng.integers(0, 3, (8, 8)), 3)
    b = partition(rng.integers(0, 3, (8, 8)), 3)
    assert_allclose(dice_scores(a, b), dice_scores(b, a))
    assert segmentation_accuracy(a, b) == segmentation_accuracy(b, a)


def test_metrics_invariant_under_joint_relabelling():
    rng = np.random.default_rng(12)
    a = partition(rng.integers(0, 3, (8, 8)), 3)
    b = partition(rng.integers(0, 3, (8, 8)), 3)
    mapping = [2, 0, 1]
    a2, b2 = a.relabel(mapping), b.relabel(mapping)
    assert segmentation_accuracy(a2, b2) == segmentation_accuracy(a, b)
    assert_allclose(dice_scores(a2, b2)[mapping], dice_scores(a, b))
    assert evaluate(a2, b2, matching='overlap').sa == pytest.approx(
        evaluate(a, b, matching='overlap').sa)
