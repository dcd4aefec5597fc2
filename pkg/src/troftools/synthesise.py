"""Script to generate synthetic benchmark images."""

import argparse
import inspect
import sys
import textwrap

import numpy as np

from troftools.imageio import write_image, write_labels, write_raster
from troftools.phantoms import PRESETS, get_preset
from troftools.utils import parse_grid, parse_taus


class Synthesise:
    """Generate a preset image and its ground truth."""

    def __init__(self, preset_name, seed=0, size=None, overrides=None,
                 debug=False):
        # Set class attributes.
        self.preset = get_preset(preset_name)
        self.seed = seed
        self.size = size
        self.overrides = overrides or {}
        self.debug = debug

    def generate(self):
        return self.preset.generate(seed=self.seed, size=self.size,
                                    debug=self.debug, **self.overrides)

    def start(self, out, truth=None, truth_raw=None, missing=None, bits=16):
        image, ground_truth = self.generate()
        write_image(out, image, bits=bits)
        if truth:
            write_labels(truth, ground_truth.partition)
        if truth_raw:
            write_labels(truth_raw, ground_truth.partition, raw=True)
        if missing:
            if ground_truth.missing is None:
                print(f'WARNING: preset {self.preset.name} removes no pixels, '
                      f'{missing} not written.')
            else:
                write_raster(missing, ground_truth.missing.bits.astype(np.uint8) * 255)
        print(textwrap.fill(textwrap.dedent(f'''\
        {self.preset.name}: {image.width}x{image.height} \t
        K={ground_truth.K} \t
        codebook={np.round(ground_truth.codebook.values, 4).tolist()} \t
        suggested --mu {self.preset.mu:g} --phases {self.preset.K}
        '''), 200))
        return image, ground_truth


def print_presets():
    for name, preset in PRESETS.items():
        print(f'{name:12} mu={preset.mu:<5g} K={preset.K}  {preset.description}')


def add_arguments(parser):
    parser.add_argument(
        'preset',
        nargs='?',
        help=f'Preset name: {", ".join(PRESETS)}.')
    parser.add_argument(
        '--seed',
        type=int,
        default=0,
        help='Noise and geometry seed.')
    parser.add_argument(
        '--size',
        help='Image size as WIDTHxHEIGHT or a single number for a square.')
    parser.add_argument(
        '--out',
        help='Output image path (.pgm or .png).')
    parser.add_argument(
        '--truth',
        help='Ground truth label image with phases spread over 0..255.')
    parser.add_argument(
        '--truth-raw',
        help='Ground truth as a 16-bit image of phase indices.')
    parser.add_argument(
        '--missing',
        help='Mask of removed pixels (example1).')
    parser.add_argument(
        '--bits',
        type=int,
        default=16,
        choices=[8, 16],
        help='Bit depth of the output image.')
    parser.add_argument(
        '--variance',
        type=float,
        help='Override the noise variance.')
    parser.add_argument(
        '--stripes',
        type=int,
        help='Number of stripes (example5).')
    parser.add_argument(
        '--phases',
        type=int,
        help='Ground truth phase count for merged stripes (example5).')
    parser.add_argument(
        '--fraction',
        type=float,
        help='Fraction of pixels removed (example1).')
    parser.add_argument(
        '--factor',
        help='Comma separated intensity factor(s) (example2, example6).')
    parser.add_argument(
        '--mode',
        choices=['subtractive', 'multiplicative'],
        help='How factors lower the mask regions (example2, example6).')
    parser.add_argument(
        '--stretch',
        action=argparse.BooleanOptionalAction,
        help='Stretch the noisy image onto [0, 1] (example2, example6).')
    parser.add_argument(
        '--list',
        action='store_true',
        help='List presets and exit.')
    parser.add_argument(
        '--debug',
        action='store_true',
        help='Print extra debugging information.')
    return parser


def preset_overrides(preset, args):
    """Translate command line flags into generator options."""
    factor = None
    if args.factor is not None:
        factors = parse_taus(args.factor)
        factor = factors[0] if len(factors) == 1 else tuple(factors)
    requested = [
        ('variance', '--variance', args.variance),
        ('n_stripes', '--stripes', args.stripes),
        ('K', '--phases', args.phases),
        ('fraction_removed', '--fraction', args.fraction),
        ('factor', '--factor', factor),
        ('mode', '--mode', args.mode),
        ('stretch', '--stretch', args.stretch),
    ]
    accepted = set(inspect.signature(preset.generator).parameters)
    overrides = {}
    for option, flag, value in requested:
        if value is None:
            continue
        if option not in accepted:
            raise ValueError(f'Preset {preset.name} does not accept {flag}.')
        overrides[option] = value
    return overrides


def run(args):
    if args.list:
        print_presets()
        return 0
    if not args.preset:
        print('error: a preset name is required (see --list).', file=sys.stderr)
        return 2
    if not args.out:
        print('error: --out is required.', file=sys.stderr)
        return 2
    try:
        preset = get_preset(args.preset)
        size = parse_grid(args.size) if args.size else None
        synthesise = Synthesise(args.preset, seed=args.seed, size=size,
                                overrides=preset_overrides(preset, args),
                                debug=args.debug)
        synthesise.start(args.out, truth=args.truth, truth_raw=args.truth_raw,
                         missing=args.missing, bits=args.bits)
    except (OSError, ValueError) as exc:
        print(f'error: {exc}', file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        print('Stopping main.')
        return 130
    return 0


def main(argv=None):
    """Generate synthetic benchmark images."""
    parser = argparse.ArgumentParser(description="""Generate a synthetic
    test image and its ground truth partition from a named preset.""")
    add_arguments(parser)
    return run(parser.parse_args(argv))
