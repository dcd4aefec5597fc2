"""Script to segment a grayscale image with T-ROF."""

import argparse
import json
import sys
import textwrap
import time

from troftools.imageio import read_image, read_labels, write_image, write_labels
from troftools.initialise import initial_thresholds
from troftools.metrics import evaluate
from troftools.report import MetricsModel, RunReport, report_schema, write_report
from troftools.rof import RofParams
from troftools.trof import TrofParams, TrofSegmenter
from troftools.tv_variants import TvVariant
from troftools.utils import parse_taus


class Segment:
    """Segment one image and write the requested outputs."""

    def __init__(self, input_path, rof_params, trof_params, init='fcm',
                 taus=None, seed=0, fcm_iterations=100, fuzzifier=2.0,
                 baseline=False, cluster_on='rof', debug=False):
        # Set class attributes.
        self.input_path = input_path
        self.rof_params = rof_params
        self.trof_params = trof_params
        self.init = init
        self.taus = taus
        self.seed = seed
        self.fcm_iterations = fcm_iterations
        self.fuzzifier = fuzzifier
        self.baseline = baseline
        self.cluster_on = cluster_on
        self.debug = debug
        self.timings = {}

    def timed(self, stage, fn, *args, **kwargs):
        start = time.perf_counter()
        result = fn(*args, **kwargs)
        self.timings[stage] = 1000 * (time.perf_counter() - start)
        return result

    def start(self, out=None, out_raw=None, out_mean=None, report=None,
              truth=None, truth_raw=False, matching='intensity'):
        image = self.timed('read', read_image, self.input_path)
        segmenter = TrofSegmenter(image, self.rof_params, debug=self.debug)
        solution = self.timed('rof', segmenter.solve)
        # Thresholds act on u, so they are seeded from its intensities.
        data = solution.u if self.cluster_on == 'rof' else image
        taus0 = self.timed('init', initial_thresholds, data, self.trof_params.K,
                           method=self.init, taus=self.taus, seed=self.seed,
                           iterations=self.fcm_iterations,
                           fuzzifier=self.fuzzifier)
        if self.debug:
            print(f'Initial thresholds ({self.init}): {taus0.taus.tolist()}')

        if self.baseline:
            result = self.timed('trof', segmenter.fixed_threshold_baseline, taus0)
        else:
            result = self.timed('trof', segmenter.segment, taus0,
                                eps_tau=self.trof_params.eps_tau,
                                max_outer_iter=self.trof_params.max_outer_iter,
                                min_phase_size=self.trof_params.min_phase_size)

        metrics = None
        if truth:
            truth_partition = read_labels(truth, raw=truth_raw)
            metrics = MetricsModel.from_metrics(
                evaluate(result.partition, truth_partition, matching=matching,
                         image=image),
                truth=str(truth))

        start = time.perf_counter()
        if out:
            write_labels(out, result.partition)
        if out_raw:
            write_labels(out_raw, result.partition, raw=True)
        if out_mean:
            write_image(out_mean, result.reconstruct())
        self.timings['write'] = 1000 * (time.perf_counter() - start)

        run_report = RunReport.from_result(
            self.input_path, result, self.rof_params, self.trof_params,
            init=self.init, initial_taus=taus0.taus.tolist(), seed=self.seed,
            cluster_on=self.cluster_on,
            metrics=metrics, timings=self.timings,
            mode='baseline' if self.baseline else 'trof')
        if report:
            write_report(report, run_report)
        self.print_summary(result, metrics)
        return result, run_report

    def print_summary(self, result, metrics):
        tau = ', '.join(f'{t:.6f}' for t in result.final_taus)
        summary = f'''\
        {self.input_path}: K={result.K} \t
        tau=({tau}) \t
        outer iterations: {result.outer_iterations} \t
        converged: {result.converged} \t
        ROF iterations: {result.u.iterations}
        '''
        if metrics:
            summary += f'SA: {metrics.SA:.4f}'
        print(textwrap.fill(textwrap.dedent(summary), 200))


def add_arguments(parser):
    parser.add_argument(
        'input',
        nargs='?',
        help='Input image (binary PGM or grayscale PNG).')
    parser.add_argument(
        '-K',
        '--phases',
        type=int,
        help="""Number of phases (default 2, or one more than the number of
        --tau values).""")
    parser.add_argument(
        '--mu',
        type=float,
        default=8.0,
        help='ROF fidelity weight.')
    parser.add_argument(
        '--rho',
        type=float,
        default=2.0,
        help='ADMM penalty parameter.')
    parser.add_argument(
        '--eps-u',
        type=float,
        default=1e-4,
        help='Relative change tolerance of the ROF solver.')
    parser.add_argument(
        '--max-iter',
        type=int,
        default=2000,
        help='Maximum ROF iterations.')
    parser.add_argument(
        '--cg-tol',
        type=float,
        default=1e-8,
        help='Relative tolerance of the inner conjugate gradient solve.')
    parser.add_argument(
        '--cg-max-iter',
        type=int,
        default=200,
        help='Maximum inner conjugate gradient iterations.')
    parser.add_argument(
        '--tv',
        default='iso',
        choices=['iso', 'aniso'],
        help='Total variation discretisation.')
    parser.add_argument(
        '--eps-tau',
        type=float,
        default=1e-5,
        help='Threshold change tolerance of the outer loop.')
    parser.add_argument(
        '--max-outer',
        type=int,
        default=100,
        help='Maximum outer threshold updates.')
    parser.add_argument(
        '--min-phase-size',
        type=int,
        default=0,
        help='Phases with at most this many pixels are removed.')
    parser.add_argument(
        '--init',
        choices=['fcm', 'kmeans', 'explicit'],
        help='Initial threshold method (default fcm, explicit with --tau).')
    parser.add_argument(
        '--tau',
        help='Comma separated initial thresholds, e.g. "0.3,0.6".')
    parser.add_argument(
        '--fcm-iterations',
        type=int,
        default=100,
        help='Clustering iterations for --init fcm|kmeans.')
    parser.add_argument(
        '--fuzzifier',
        type=float,
        default=2.0,
        help='Fuzzy C-means exponent.')
    parser.add_argument(
        '--seed',
        type=int,
        default=0,
        help='Seed used when clustering needs random starts.')
    parser.add_argument(
        '--cluster-on',
        default='rof',
        choices=['rof', 'input'],
        help="""Image the initial clustering runs on: the ROF solution
        (default) or the input image.""")
    parser.add_argument(
        '--baseline',
        action='store_true',
        help='Threshold once at the initial thresholds without updates.')
    parser.add_argument(
        '--out',
        help='Label image with phases spread over 0..255.')
    parser.add_argument(
        '--out-raw',
        help='16-bit label image storing phase indices.')
    parser.add_argument(
        '--out-mean',
        help='Piecewise constant image of the phase means.')
    parser.add_argument(
        '--report',
        help='JSON report path.')
    parser.add_argument(
        '--truth',
        help='Ground truth label image; adds SA and DICE to the report.')
    parser.add_argument(
        '--truth-raw',
        action='store_true',
        help='Ground truth stores phase indices directly.')
    parser.add_argument(
        '--matching',
        default='intensity',
        choices=['intensity', 'overlap'],
        help='How predicted phases are matched to ground truth phases.')
    parser.add_argument(
        '--schema',
        action='store_true',
        help='Print the JSON schema of the report and exit.')
    parser.add_argument(
        '--debug',
        action='store_true',
        help='Print extra debugging information.')
    return parser


def run(args):
    if args.schema:
        print(json.dumps(report_schema(), indent=2))
        return 0
    if not args.input:
        print('error: an input image is required.', file=sys.stderr)
        return 2
    try:
        taus = parse_taus(args.tau) if args.tau else None
        init = args.init or ('explicit' if taus is not None else 'fcm')
        if init == 'explicit' and taus is None:
            raise ValueError('--init explicit requires --tau.')
        if taus is not None and init != 'explicit':
            raise ValueError(f'--tau cannot be combined with --init {init}.')
        K = args.phases
        if taus is not None:
            if K is not None and K != len(taus) + 1:
                raise ValueError(f'--phases {K} needs {K - 1} thresholds, '
                                 f'{len(taus)} given.')
            K = len(taus) + 1
        rof_params = RofParams(mu=args.mu, rho=args.rho, eps_u=args.eps_u,
                               max_iter=args.max_iter,
                               variant=TvVariant.parse(args.tv),
                               cg_tol=args.cg_tol, cg_max_iter=args.cg_max_iter)
        trof_params = TrofParams(K=K or 2, rof=rof_params, eps_tau=args.eps_tau,
                                 max_outer_iter=args.max_outer,
                                 min_phase_size=args.min_phase_size)
        segment = Segment(args.input, rof_params, trof_params, init=init,
                          taus=taus, seed=args.seed,
                          fcm_iterations=args.fcm_iterations,
                          fuzzifier=args.fuzzifier, baseline=args.baseline,
                          cluster_on=args.cluster_on,
                          debug=args.debug)
        segment.start(out=args.out, out_raw=args.out_raw,
                      out_mean=args.out_mean, report=args.report,
                      truth=args.truth, truth_raw=args.truth_raw,
                      matching=args.matching)
    except (OSError, ValueError) as exc:
        print(f'error: {exc}', file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        print('Stopping main.')
        return 130
    return 0


def main(argv=None):
    """Segment an image with T-ROF."""
    parser = argparse.ArgumentParser(description="""Segment a grayscale
    image by solving the ROF model once and iteratively thresholding its
    solution.""")
    add_arguments(parser)
    return run(parser.parse_args(argv))
