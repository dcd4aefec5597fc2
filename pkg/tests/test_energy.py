import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from troftools.core import PhasePartition
from troftools.energy import (Codebook, PcmsWeights, _all_masks,
                              all_mask_energies, brute_force_min_energy,
                              energy_chan_vese, energy_pcms,
                              energy_pcms_exhaustive_min, energy_pcms_v,
                              energy_single, energy_trof,
                              is_partial_minimizer, lambda_from_mu,
                              pcms_v_weights)
from troftools.phantoms import gen_multilevel
from troftools.rof import RofParams
from troftools.trof import TrofSegmenter
from troftools.tv_variants import TvVariant


def test_energy_single():
    f = np.full((3, 3), 0.2)
    assert energy_single(np.zeros((3, 3), dtype=bool), 0.5, f, 8.0) == 0.0
    full = np.ones((3, 3), dtype=bool)
    assert energy_single(full, 0.5, f, 8.0) == pytest.approx(8.0 * 9 * 0.3)
    corner = np.zeros((3, 3), dtype=bool)
    corner[0, 0] = True
    assert energy_single(corner, 0.5, f, 8.0) == pytest.approx(2.0 + 8.0 * 0.3)


def test_energy_trof_requires_nested_masks():
    f = np.full((1, 3), 0.5)
    outer = np.array([[True, True, False]])
    inner = np.array([[True, False, False]])
    assert energy_trof([outer, inner], [0.3, 0.6], f, 1.0) == pytest.approx(
        energy_single(outer, 0.3, f, 1.0) + energy_single(inner, 0.6, f, 1.0))
    with pytest.raises(ValueError):
        energy_trof([inner, outer], [0.3, 0.6], f, 1.0)
    with pytest.raises(ValueError):
        energy_trof([outer], [0.3, 0.6], f, 1.0)


def test_chan_vese_differs_from_thresholding_by_a_constant():
    rng = np.random.default_rng(11)
    f = rng.random((3, 3))
    m0, m1, mu = 0.25, 0.7, 3.0
    lam = lambda_from_mu(mu, m0, m1)
    gaps = [energy_chan_vese(mask, m0, m1, f, lam)
            - energy_single(mask, 0.5 * (m0 + m1), f, mu)
            for mask in _all_masks(9).reshape(-1, 3, 3)]
    assert np.ptp(gaps) < 1e-10
    assert gaps[0] == pytest.approx(lam * np.sum((m0 - f) ** 2))


def test_lambda_from_mu():
    assert lambda_from_mu(8.0, 0.2, 0.6) == pytest.approx(10.0)
    with pytest.raises(ValueError):
        lambda_from_mu(8.0, 0.6, 0.6)


def test_all_masks_order():
    masks = _all_masks(3)
    assert masks.shape == (8, 3)
    assert_array_equal(masks[1], [False, False, True])
    assert_array_equal(masks[4], [True, False, False])


def test_brute_force_prefers_smallest_mask_on_ties():
    f = np.full((2, 2), 0.5)
    mask, energy = brute_force_min_energy(f, 0.5, 4.0)
    assert energy == 0.0
    assert mask.is_empty()


def test_brute_force_finds_bright_pixels():
    f = np.array([[0.9, 0.9], [0.1, 0.1]])
    mask, energy = brute_force_min_energy(f, 0.5, 8.0)
    assert_array_equal(mask.array, [[True, True], [False, False]])
    assert energy == pytest.approx(2.0 + 8.0 * 2 * (0.5 - 0.9))
    masks, energies = all_mask_energies(f, 0.5, 8.0)
    assert masks.shape == (16, 2, 2)
    assert energies.min() == pytest.approx(energy)


def test_brute_force_minimisers_nest():
    rng = np.random.default_rng(4)
    for _ in range(10):
        f = rng.random((3, 3))
        low, _ = brute_force_min_energy(f, 0.3, 8.0)
        high, _ = brute_force_min_energy(f, 0.6, 8.0)
        assert high.issubset(low)


def test_brute_force_limit():
    with pytest.raises(ValueError):
        brute_force_min_energy(np.zeros((4, 5)), 0.5, 1.0)


def test_codebook_and_weights_validation():
    assert Codebook([0.5, 0.1]).K == 2
    assert_allclose(Codebook([0.5, 0.1]).values, [0.1, 0.5])
    with pytest.raises(ValueError):
        Codebook([0.5, 0.5])
    with pytest.raises(ValueError):
        Codebook([0.1, 1.5])
    with pytest.raises(ValueError):
        PcmsWeights([1.0, 0.0])


def test_pcms_v_weights():
    weights = pcms_v_weights([0.0, 0.5, 1.0], 2.0)
    assert_allclose(weights.values, [2.0, 4.0, 2.0])
    with pytest.raises(ValueError):
        pcms_v_weights([0.5, 0.5], 2.0)


def test_pcms_energies_on_two_phases():
    f = np.array([[0.1, 0.1, 0.9, 0.9]])
    partition = PhasePartition(np.array([[0, 0, 1, 1]]), 2)
    codebook = Codebook([0.1, 0.9])
    # One jump: each phase perimeter is 1.
    assert energy_pcms(partition, codebook, f, 5.0) == pytest.approx(1.0)
    assert energy_pcms_v(partition, codebook, f, [1.0, 1.0]) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        energy_pcms(partition, Codebook([0.1, 0.5, 0.9]), f, 5.0)


def test_exhaustive_minimum_recovers_clean_partition():
    f = np.array([[0.1, 0.9], [0.1, 0.9]])
    best, energy = energy_pcms_exhaustive_min(f, [0.1, 0.9], lam=10.0)
    assert_array_equal(best.labels, [[0, 1], [0, 1]])
    assert energy == pytest.approx(2.0)


def test_partial_minimizer_of_clean_partition():
    f = np.array([[0.1, 0.1, 0.9], [0.1, 0.1, 0.9], [0.1, 0.1, 0.9]])
    partition = PhasePartition((f > 0.5).astype(np.int64), 2)
    report = is_partial_minimizer(partition, [0.1, 0.9], f, lam=10.0)
    assert report.passed
    exhaustive = is_partial_minimizer(partition, [0.1, 0.9], f, lam=10.0,
                                      neighborhood='exhaustive')
    assert exhaustive.passed
    wrong = is_partial_minimizer(partition, [0.2, 0.9], f, lam=10.0)
    assert not wrong.means_ok
    assert not wrong.passed


def test_partial_minimizer_finds_improving_move():
    f = np.array([[0.1, 0.1, 0.9, 0.9]])
    partition = PhasePartition(np.array([[0, 1, 1, 1]]), 2)
    report = is_partial_minimizer(partition, [0.1, 0.6333333333333333], f,
                                  lam=10.0)
    assert report.violations
    assert (0, 1, 1, 0) == report.violations[0][:4]


def test_partial_minimizer_needs_a_weight():
    partition = PhasePartition(np.zeros((2, 2), dtype=np.int64), 1)
    with pytest.raises(ValueError):
        is_partial_minimizer(partition, [0.5], np.full((2, 2), 0.5))


def test_segmentation_of_nested_frames_is_a_partial_minimizer():
    levels = (0.1, 0.5, 0.9)
    image, truth = gen_multilevel(levels, layout='frames', variance=0.0, size=12)
    mu = 20.0
    result = TrofSegmenter(image, RofParams(mu=mu, eps_u=1e-8,
                                            variant=TvVariant.ANISOTROPIC)).segment([0.3, 0.7])
    assert result.K == 3
    assert_array_equal(result.partition.labels, truth.partition.labels)
    weights = pcms_v_weights(result.final_means, mu)
    report = is_partial_minimizer(result.partition, result.final_means, image,
                                  weights=weights)
    assert report.passed
