import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from troftools.core import tv
from troftools.rof import RofParams, RofSolver, rof_energy, solve_rof, taut_string_1d
from troftools.tv_variants import TvVariant


def tight_params(mu, variant=TvVariant.ANISOTROPIC):
    return RofParams(mu=mu, eps_u=1e-10, max_iter=20000, variant=variant,
                     cg_tol=1e-12, cg_max_iter=500)


def test_taut_string_two_samples():
    assert_allclose(taut_string_1d([0.0, 1.0], 1.0), [0.5, 0.5])
    assert_allclose(taut_string_1d([0.0, 1.0], 100.0), [0.01, 0.99])


def test_taut_string_keeps_constant_signal():
    assert_allclose(taut_string_1d(np.full(6, 0.4), 2.0), np.full(6, 0.4))


@pytest.mark.parametrize('mu', [0.5, 2.0, 8.0])
def test_taut_string_preserves_sum(mu):
    y = np.random.default_rng(1).random(25)
    assert np.sum(taut_string_1d(y, mu)) == pytest.approx(np.sum(y))


def test_taut_string_rejects_bad_input():
    with pytest.raises(ValueError):
        taut_string_1d([], 1.0)
    with pytest.raises(ValueError):
        taut_string_1d([0.1, 0.2], 0.0)


@pytest.mark.parametrize('mu', [0.5, 2.0, 8.0])
def test_admm_matches_taut_string_on_a_row(mu):
    y = np.random.default_rng(7).random(20)
    solution = solve_rof(y[np.newaxis, :], tight_params(mu))
    assert solution.converged
    assert_allclose(solution.u[0], taut_string_1d(y, mu), atol=1e-4)


def test_constant_image_converges_immediately():
    f = np.full((6, 6), 0.25)
    solution = solve_rof(f, RofParams(mu=8.0))
    assert solution.converged
    assert solution.iterations == 1
    assert_allclose(solution.u, f)


def test_zero_image_counts_as_converged():
    solution = solve_rof(np.zeros((4, 4)), RofParams(mu=1.0))
    assert solution.converged
    assert_array_equal(solution.u, 0.0)


def test_solution_is_clamped_and_lowers_energy():
    f = np.random.default_rng(0).random((12, 12))
    params = RofParams(mu=4.0)
    solution = solve_rof(f, params)
    assert f.min() <= solution.u.min() and solution.u.max() <= f.max()
    assert solution.raw_min <= solution.u.min()
    assert solution.raw_max >= solution.u.max()
    assert solution.final_energy == pytest.approx(rof_energy(solution.u, f, 4.0))
    assert solution.final_energy < rof_energy(f, f, 4.0)
    assert len(solution.relative_change_history) == solution.iterations


def test_non_convergence_is_flagged(capsys):
    f = np.random.default_rng(2).random((8, 8))
    solution = solve_rof(f, RofParams(mu=1.0, eps_u=1e-12, max_iter=3))
    assert not solution.converged
    assert solution.iterations == 3
    assert 'WARNING' in capsys.readouterr().out


def test_shrink_variants():
    f = np.zeros((2, 2))
    t = np.zeros((2, 2, 2))
    t[0, 0, 0], t[1, 0, 0] = 3.0, 4.0
    iso = RofSolver(f, RofParams(mu=1.0, rho=1.0)).shrink(t)
    assert_allclose(iso[:, 0, 0], [2.4, 3.2])
    aniso = RofSolver(f, RofParams(mu=1.0, rho=1.0, variant='aniso')).shrink(t)
    assert_allclose(aniso[:, 0, 0], [2.0, 3.0])
    assert_array_equal(aniso[:, 1, 1], 0.0)


@pytest.mark.parametrize('kwargs', [
    {'mu': 0.0},
    {'mu': 1.0, 'rho': -1.0},
    {'mu': 1.0, 'eps_u': 1.0},
    {'mu': 1.0, 'max_iter': 0},
    {'mu': 1.0, 'variant': 'l1'},
])
def test_invalid_params(kwargs):
    with pytest.raises(ValueError):
        RofParams(**kwargs)


def test_solution_preserves_mean():
    f = np.random.default_rng(6).random((12, 12))
    solution = solve_rof(f, tight_params(4.0))
    assert abs(solution.u.mean() - f.mean()) < 1e-6


def test_raw_solution_obeys_maximum_principle():
    f = 0.2 + 0.6 * np.random.default_rng(7).random((10, 10))
    solution = solve_rof(f, tight_params(2.0))
    assert solution.raw_min >= f.min() - 1e-8
    assert solution.raw_max <= f.max() + 1e-8


def test_tv_shrinks_as_mu_decreases():
    f = np.random.default_rng(8).random((10, 10))
    variations = [tv(solve_rof(f, tight_params(mu)).u, TvVariant.ANISOTROPIC)
                  for mu in (16.0, 4.0, 1.0)]
    assert variations[0] <= tv(f, TvVariant.ANISOTROPIC) + 1e-9
    assert variations[1] <= variations[0] + 1e-9
    assert variations[2] <= variations[1] + 1e-9
