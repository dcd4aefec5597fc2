"""Single `trof` entry point dispatching to the segment, synth and verify
scripts."""

import argparse

import troftools.segment  # noqa: F401  (binds the submodule over the re-exported function)
from troftools import __version__, segment, synthesise, verify

COMMANDS = {
    'segment': (segment, 'Segment an image with T-ROF.'),
    'synth': (synthesise, 'Generate a synthetic benchmark image.'),
    'verify': (verify, 'Run the verification battery.'),
}


def build_parser():
    parser = argparse.ArgumentParser(prog='trof', description="""Multiphase
    image segmentation by thresholding a single ROF solution.""")
    parser.add_argument(
        '--version',
        action='version',
        version=f'%(prog)s {__version__}')
    subparsers = parser.add_subparsers(dest='command', required=True)
    for name, (module, help_text) in COMMANDS.items():
        module.add_arguments(subparsers.add_parser(name, help=help_text,
                                                   description=help_text))
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    module, _ = COMMANDS[args.command]
    return module.run(args)
