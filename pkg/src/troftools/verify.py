"""Script to run the property and oracle verification battery."""

import argparse
import multiprocessing as mp
import sys
import textwrap
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from troftools.core import PhasePartition, divergence, gradient
from troftools.energy import (_all_masks, brute_force_min_energy,
                              energy_chan_vese, energy_single,
                              is_partial_minimizer, lambda_from_mu,
                              pcms_v_weights)
from troftools.initialise import FcmParams, fcm_centers, initial_thresholds
from troftools.metrics import evaluate
from troftools.phantoms import PRESETS, gen_multilevel, get_preset
from troftools.phantoms.presets import EXAMPLE3_LEVELS
from troftools.rof import RofParams, solve_rof, taut_string_1d
from troftools.trof import SLOW_CONVERGENCE, TrofSegmenter
from troftools.tv_variants import TvVariant
from troftools.utils import parse_grid, worker_count

# Outer iteration limit every preset run must converge within.
CONVERGENCE_LIMIT = 50


def oracle_rof_params(mu):
    """Tightly converged anisotropic solver settings for oracle checks."""
    return RofParams(mu=mu, eps_u=1e-10, max_iter=20000,
                     variant=TvVariant.ANISOTROPIC, cg_tol=1e-12,
                     cg_max_iter=500)


@dataclass
class SuiteResult:
    name: str
    checks: int = 0
    failures: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self):
        return not self.failures


@lru_cache(maxsize=None)
def segment_preset(name, seed=0):
    """Segment a preset image with its own mu and K.

    Initial thresholds come from fuzzy C-means on the ROF solution.
    Returns the result, the ground truth and the input image.
    """
    preset = get_preset(name)
    image, truth = preset.generate(seed=seed)
    segmenter = TrofSegmenter(image, RofParams(mu=preset.mu))
    solution = segmenter.solve()
    taus0 = initial_thresholds(solution.u, preset.K, method='fcm', seed=seed)
    result = segmenter.segment(taus0, max_outer_iter=100)
    return result, truth, image


def suite_adjoint(result, trials, grid, seed):
    for t in range(trials):
        rng = np.random.default_rng(seed + t)
        u = rng.random(grid)
        p = rng.standard_normal((2,) + grid)
        lhs = float(np.sum(gradient(u) * p))
        rhs = -float(np.sum(u * divergence(p)))
        result.checks += 1
        if abs(lhs - rhs) > 1e-10:
            result.failures.append(f'seed {seed + t}: <grad u, p>={lhs!r}, '
                                   f'-<u, div p>={rhs!r}')


def suite_rof_1d(result, trials, grid, seed):
    mus = (0.5, 2.0, 8.0)
    for t in range(trials):
        rng = np.random.default_rng(seed + t)
        n = int(rng.integers(8, 65))
        y = rng.random(n)
        mu = mus[t % len(mus)]
        exact = taut_string_1d(y, mu)
        solution = solve_rof(y[np.newaxis, :], oracle_rof_params(mu))
        rms = float(np.sqrt(np.mean((solution.u[0] - exact) ** 2)))
        result.checks += 1
        if rms > 1e-4:
            result.failures.append(f'seed {seed + t}: n={n} mu={mu} rms={rms:.3e}')


def suite_layer_cake(result, trials, grid, seed, mu=8.0):
    taus = np.round(np.arange(1, 10) / 10, 1)
    for t in range(trials):
        rng = np.random.default_rng(seed + t)
        f = rng.random(grid)
        u = solve_rof(f, oracle_rof_params(mu)).u
        for tau in taus:
            energy = energy_single(u > tau, tau, f, mu, TvVariant.ANISOTROPIC)
            _, minimum = brute_force_min_energy(f, tau, mu, TvVariant.ANISOTROPIC)
            result.checks += 1
            if energy > minimum + 1e-3:
                result.failures.append(f'seed {seed + t}: tau={tau} '
                                       f'thresholded {energy:.6f} > minimum {minimum:.6f}')


def suite_linkage(result, trials, grid, seed):
    grid = (3, 3)
    masks = _all_masks(9).reshape((-1,) + grid)
    for t in range(trials):
        rng = np.random.default_rng(seed + t)
        f = rng.random(grid)
        m0, m1 = np.sort(rng.uniform(0.0, 1.0, 2))
        if m1 - m0 < 1e-3:
            m1 = min(1.0, m0 + 0.1)
        mu = float(rng.uniform(0.5, 10.0))
        lam = lambda_from_mu(mu, m0, m1)
        gaps = np.array([energy_chan_vese(mask, m0, m1, f, lam)
                         - energy_single(mask, 0.5 * (m0 + m1), f, mu)
                         for mask in masks])
        expected = lam * float(np.sum((m0 - f) ** 2))
        result.checks += 1
        if np.ptp(gaps) > 1e-10 or abs(gaps[0] - expected) > 1e-10:
            result.failures.append(f'seed {seed + t}: spread {np.ptp(gaps):.3e}')


def suite_nesting(result, trials, grid, seed, mu=8.0):
    for t in range(trials):
        rng = np.random.default_rng(seed + t)
        f = rng.random(grid)
        tau1, tau2 = np.sort(rng.uniform(0.05, 0.95, 2))
        low, _ = brute_force_min_energy(f, tau1, mu)
        high, _ = brute_force_min_energy(f, tau2, mu)
        result.checks += 1
        if not high.issubset(low):
            result.failures.append(f'seed {seed + t}: minimiser at tau={tau2:.4f} '
                                   f'not inside the one at tau={tau1:.4f}')


def suite_cleanup(result, trials, grid, seed):
    f = np.full((16, 16), 0.2)
    f[:, 8:] = 0.8
    truth = PhasePartition((f > 0.5).astype(np.int64), 2)
    segmenter = TrofSegmenter(f, RofParams(mu=8.0))
    run = segmenter.segment([0.3, 0.6])
    result.checks += 1
    sa = evaluate(run.partition, truth).sa if run.K == 2 else 0.0
    if run.K != 2 or sa != 1.0:
        result.failures.append(f'K=3 on two levels gave K={run.K}, SA={sa}')


def suite_partial_minimizer(result, trials, grid, seed, mu=20.0):
    levels = (0.1, 0.5, 0.9)
    image, _ = gen_multilevel(levels, layout='frames', variance=0.0, size=12)
    segmenter = TrofSegmenter(image, RofParams(mu=mu, eps_u=1e-8,
                                               variant=TvVariant.ANISOTROPIC))
    run = segmenter.segment([0.3, 0.7])
    result.checks += 1
    if run.K != 3:
        result.failures.append(f'expected 3 phases, got {run.K}')
        return
    weights = pcms_v_weights(run.final_means, mu)
    report = is_partial_minimizer(run.partition, run.final_means, image,
                                  weights=weights)
    if not report.passed:
        result.failures.append(f'mean error {report.mean_error:.3e}, '
                               f'{len(report.violations)} improving moves')


def _preset_runs(result, presets, seed, check):
    for name in presets:
        run, _, _ = segment_preset(name, seed)
        result.checks += 1
        message = check(run)
        if message:
            result.failures.append(f'{name} seed {seed}: {message}')
        if run.outer_iterations > SLOW_CONVERGENCE:
            result.warnings.append(f'{name}: {run.outer_iterations} outer iterations')


def suite_interleave(result, trials, grid, seed, presets=tuple(PRESETS)):
    def check(run):
        bad = run.trace.interleaving_violations()
        return f'interleaving fails at iterations {bad}' if bad else None
    _preset_runs(result, presets, seed, check)


def suite_sign_monotone(result, trials, grid, seed, presets=tuple(PRESETS)):
    def check(run):
        increases = run.trace.sign_monotone_violations()
        stalls = run.trace.strict_decrease_violations()
        if increases:
            return f's_k increased at iterations {increases}'
        if stalls:
            return f's_k did not drop after zeta_1 flipped at {stalls}'
        return None
    _preset_runs(result, presets, seed, check)


def suite_convergence(result, trials, grid, seed, presets=tuple(PRESETS)):
    def check(run):
        if not run.converged or run.outer_iterations > CONVERGENCE_LIMIT:
            return (f'no convergence within {CONVERGENCE_LIMIT} iterations '
                    f'({run.outer_iterations}, converged={run.converged})')
        return None
    _preset_runs(result, presets, seed, check)


def suite_accuracy(result, trials, grid, seed):
    targets = {'example1': 0.97, 'example2': 0.97, 'example3': 0.975}
    for name, target in targets.items():
        run, truth, image = segment_preset(name, seed)
        sa = evaluate(run.partition, truth.partition, image=image).sa
        result.checks += 1
        if sa < target:
            result.failures.append(f'{name} seed {seed}: SA={sa:.4f} < {target}')


def suite_k_scaling(result, trials, grid, seed, phase_counts=(5, 10, 15)):
    preset = get_preset('example5')
    image, _ = preset.generate(seed=seed)
    segmenter = TrofSegmenter(image, RofParams(mu=preset.mu))
    solution = segmenter.solve()
    seconds = {}
    for K in phase_counts:
        _, truth = preset.generate(seed=seed, K=K)
        start = time.perf_counter()
        taus0 = initial_thresholds(solution.u, K, method='fcm', seed=seed)
        run = segmenter.segment(taus0)
        seconds[K] = segmenter.rof_seconds + time.perf_counter() - start
        sa = evaluate(run.partition, truth.partition, image=image).sa
        result.checks += 1
        if sa < 0.97:
            result.failures.append(f'K={K} seed {seed}: SA={sa:.4f} < 0.97')
    ratio = seconds[phase_counts[-1]] / seconds[phase_counts[0]]
    result.checks += 1
    if ratio > 1.5:
        result.failures.append(f'time ratio K={phase_counts[-1]}/K={phase_counts[0]} '
                               f'is {ratio:.2f} > 1.5')


def suite_fcm_codebook(result, trials, grid, seed):
    preset = get_preset('example3')
    image, _ = preset.generate(seed=seed)
    u = solve_rof(image, RofParams(mu=preset.mu)).u
    centers = fcm_centers(u, FcmParams(K=preset.K, seed=seed)).values
    result.checks += 1
    error = float(np.max(np.abs(centers - np.asarray(EXAMPLE3_LEVELS))))
    if error > 0.05:
        result.failures.append(f'seed {seed}: centres {np.round(centers, 4).tolist()} '
                               f'off by {error:.4f}')


SUITES = {
    'adjoint': suite_adjoint,
    'rof-1d': suite_rof_1d,
    'layer-cake': suite_layer_cake,
    'linkage': suite_linkage,
    'nesting': suite_nesting,
    'cleanup': suite_cleanup,
    'partial-minimizer': suite_partial_minimizer,
    'interleave': suite_interleave,
    'sign-monotone': suite_sign_monotone,
    'convergence': suite_convergence,
    'accuracy': suite_accuracy,
    'k-scaling': suite_k_scaling,
    'fcm-codebook': suite_fcm_codebook,
}

# Trials and grid per suite when not given on the command line.
DEFAULT_TRIALS = {'adjoint': 10, 'rof-1d': 100, 'layer-cake': 50,
                  'linkage': 20, 'nesting': 50}

DEFAULT_GRIDS = {'adjoint': (8, 8), 'layer-cake': (3, 3), 'nesting': (3, 3)}


def run_suite(name, trials=None, grid=None, seed=0):
    """Run one suite; failures carry the seed that produced them."""
    result = SuiteResult(name)
    start = time.perf_counter()
    trials = trials if trials is not None else DEFAULT_TRIALS.get(name, 1)
    grid = grid if grid is not None else DEFAULT_GRIDS.get(name, (3, 3))
    try:
        SUITES[name](result, trials, grid, seed)
    except Exception as exc:
        result.failures.append(f'{type(exc).__name__}: {exc}')
    result.seconds = time.perf_counter() - start
    return result


class Verify:
    """Run verification suites, in parallel when workers allow."""

    def __init__(self, suites, trials=None, grid=None, seed=0, workers=None,
                 debug=False):
        unknown = [name for name in suites if name not in SUITES]
        if unknown:
            raise ValueError(f'Unknown suite(s): {", ".join(unknown)}.')
        self.suites = list(suites)
        self.trials = trials
        self.grid = grid
        self.seed = seed
        self.workers = min(worker_count(workers), len(self.suites))
        self.debug = debug

    def start(self):
        tasks = [(name, self.trials, self.grid, self.seed) for name in self.suites]
        if self.debug:
            print(f'Running {len(tasks)} suite(s) on {self.workers} worker(s).')
        if self.workers == 1:
            results = [run_suite(*task) for task in tasks]
        else:
            ctx = mp.get_context('spawn')
            with ctx.Pool(self.workers) as pool:
                results = pool.starmap(run_suite, tasks)
        self.print_log(results)
        return results

    def print_log(self, results):
        for result in results:
            print(textwrap.fill(textwrap.dedent(f'''\
            {result.name:18} \t
            checks: {result.checks:4} \t
            failures: {len(result.failures):3} \t
            time: {result.seconds:7.2f} s \t
            {'PASS' if result.passed else 'FAIL'}
            '''), 200))
        for result in results:
            for warning in result.warnings:
                print(f'WARNING: {result.name}: {warning}')
            for failure in result.failures:
                print(f'FAIL: {result.name}: {failure}')


def add_arguments(parser):
    parser.add_argument(
        '--suite',
        action='append',
        choices=list(SUITES),
        help='Suite to run; repeat for several (default: all).')
    parser.add_argument(
        '--trials',
        type=int,
        help='Random instances per suite.')
    parser.add_argument(
        '--grid',
        help='Grid size WIDTHxHEIGHT for the enumeration suites.')
    parser.add_argument(
        '--seed',
        type=int,
        default=0,
        help='First seed; trial t uses seed + t.')
    parser.add_argument(
        '--workers',
        type=int,
        help='Worker processes (capped by TROF_THREADS).')
    parser.add_argument(
        '--list',
        action='store_true',
        help='List suites and exit.')
    parser.add_argument(
        '--debug',
        action='store_true',
        help='Print extra debugging information.')
    return parser


def run(args):
    if args.list:
        for name in SUITES:
            print(name)
        return 0
    try:
        grid = parse_grid(args.grid) if args.grid else None
        if args.trials is not None and args.trials < 1:
            raise ValueError('--trials must be positive.')
        verify = Verify(args.suite or list(SUITES), trials=args.trials,
                        grid=grid, seed=args.seed, workers=args.workers,
                        debug=args.debug)
        results = verify.start()
    except ValueError as exc:
        print(f'error: {exc}', file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        print('Stopping main.')
        return 130
    return 0 if all(result.passed for result in results) else 1


def main(argv=None):
    """Run the verification battery."""
    parser = argparse.ArgumentParser(description="""Run property and oracle
    checks of the ROF solver, the energies and T-ROF.""")
    add_arguments(parser)
    return run(parser.parse_args(argv))
