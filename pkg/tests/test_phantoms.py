import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from troftools.phantoms import (PRESETS, MissingPixelPhantom, NoiseSpec,
                                gen_close_intensity, gen_multilevel,
                                gen_stripes, gen_thin_structures,
                                gen_two_phase_missing, get_preset)
from troftools.phantoms.presets import EXAMPLE3_LEVELS


def test_generation_is_seeded():
    a, _ = gen_multilevel(EXAMPLE3_LEVELS, seed=3, size=32)
    b, _ = gen_multilevel(EXAMPLE3_LEVELS, seed=3, size=32)
    c, _ = gen_multilevel(EXAMPLE3_LEVELS, seed=4, size=32)
    assert_array_equal(a.array, b.array)
    assert not np.array_equal(a.array, c.array)


def test_noisy_images_stay_in_unit_range():
    image, _ = gen_multilevel(EXAMPLE3_LEVELS, variance=0.1, size=32)
    assert image.array.min() >= 0.0 and image.array.max() <= 1.0


def test_clean_multilevel_codebook_matches_levels():
    image, truth = gen_multilevel(EXAMPLE3_LEVELS, variance=0.0)
    assert truth.K == 5
    assert_allclose(truth.codebook.values, EXAMPLE3_LEVELS)
    assert_allclose(image.array, truth.codebook.values[truth.partition.labels])


@pytest.mark.parametrize('layout', ['shapes', 'rings', 'frames', 'bands', 'annuli'])
def test_layouts_use_every_level(layout):
    levels = (0.1, 0.4, 0.7, 0.95)
    _, truth = gen_multilevel(levels, layout=layout, variance=0.0, size=64)
    assert truth.K == 4
    assert np.all(truth.partition.phase_sizes() > 0)


def test_frames_nest_by_depth():
    _, truth = gen_multilevel((0.1, 0.5, 0.9), layout='frames', variance=0.0,
                              size=12)
    labels = truth.partition.labels
    assert labels[0, 0] == 0 and labels[2, 2] == 1 and labels[5, 5] == 2
    assert labels[1, 6] == 0 and labels[3, 6] == 1


def test_annuli_have_equal_areas():
    _, truth = gen_multilevel(EXAMPLE3_LEVELS, layout='annuli', variance=0.0)
    sizes = truth.partition.phase_sizes()
    assert_allclose(sizes, 128 * 128 / 5, rtol=0.02)
    labels = truth.partition.labels
    assert labels[64, 64] == 0 and labels[0, 0] == 4


def test_example5_truth_has_preset_phase_count():
    preset = get_preset('example5')
    _, truth = preset.generate()
    assert truth.K == preset.K


def test_missing_pixels():
    image, truth = gen_two_phase_missing(size=64, fraction_removed=0.8)
    assert truth.missing.count() == math.floor(0.8 * 64 * 64)
    assert_array_equal(image.array[truth.missing.array], 0.0)
    assert truth.K == 2
    assert_allclose(truth.codebook.values, [0.0, 1.0])
    with pytest.raises(ValueError):
        MissingPixelPhantom(16, 16, fraction_removed=1.0)


def test_stripes_ground_truth_merges_groups():
    image, truth = gen_stripes(variance=0.0)
    assert image.shape == (140, 240)
    assert truth.K == 30
    assert_allclose(truth.codebook.values, np.arange(30) / 29)
    _, merged = gen_stripes(variance=0.0, K=5)
    assert merged.K == 5
    assert_array_equal(merged.partition.labels[0, ::48], [0, 1, 2, 3, 4])
    with pytest.raises(ValueError):
        gen_stripes(n_stripes=30, size=(10, 20))


def test_close_intensity_three_phases():
    _, truth = gen_close_intensity(mask_kind='three-phase', factor=(0.1, 0.6),
                                   variance=0.0, stretch=False, size=64)
    assert truth.K == 3
    assert_allclose(truth.codebook.values, [0.0, 0.4, 0.5])
    with pytest.raises(ValueError):
        gen_close_intensity(mask_kind='three-phase', factor=0.1)


def test_close_intensity_stretch():
    image, truth = gen_close_intensity(size=64, seed=1)
    assert image.array.min() == 0.0 and image.array.max() == 1.0
    assert truth.K == 2


def test_thin_structures():
    _, truth = gen_thin_structures(variance=0.0)
    assert truth.K == 3
    assert_allclose(truth.codebook.values, [0.0, 0.3, 1.0])


def test_noise_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec(variance=-1.0)
    with pytest.raises(ValueError):
        NoiseSpec(kind='poisson')


@pytest.mark.parametrize('name', list(PRESETS))
def test_presets_generate(name):
    preset = get_preset(name)
    image, truth = preset.generate(seed=0, size=40)
    assert image.shape == (40, 40)
    assert truth.partition.shape == (40, 40)
    assert preset.mu > 0 and preset.K >= 2


def test_preset_overrides():
    _, truth = get_preset('example5').generate(K=10)
    assert truth.K == 10
    with pytest.raises(ValueError):
        get_preset('example9')
