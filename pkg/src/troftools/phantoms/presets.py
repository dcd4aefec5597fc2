"""Named benchmark images and the parameters they are segmented with."""

from dataclasses import dataclass, field

from troftools.phantoms.phantoms import (gen_close_intensity, gen_multilevel,
                                         gen_stripes, gen_thin_structures,
                                         gen_two_phase_missing)

EXAMPLE3_LEVELS = (0.0311, 0.3372, 0.5360, 0.7175, 0.9324)

EXAMPLE4_LEVELS = (0.0017, 0.3164, 0.6399, 0.8773)

EXAMPLE7_LEVELS = (0.15, 0.3, 0.7, 0.85)


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    mu: float
    K: int
    generator: object
    size: tuple = (128, 128)
    options: dict = field(default_factory=dict)

    def generate(self, seed=0, size=None, debug=False, **overrides):
        """Return (image, ground truth); overrides replace preset options."""
        options = dict(self.options)
        options.update({k: v for k, v in overrides.items() if v is not None})
        return self.generator(size=size or self.size, seed=seed, debug=debug,
                              **options)


PRESETS = {
    'example1': Preset(
        'example1', 'A disk with 80% of pixels removed.',
        mu=1.0, K=2, generator=gen_two_phase_missing,
        options={'fraction_removed': 0.8}),
    'example2': Preset(
        'example2', 'Two phases 2e-4 apart on a constant image, stretched.',
        mu=8.0, K=2, generator=gen_close_intensity,
        options={'mask_kind': 'two-phase', 'variance': 1e-8, 'factor': 2e-4}),
    'example3': Preset(
        'example3', 'Five equal-area concentric phases with noise variance 1e-2.',
        mu=8.0, K=5, generator=gen_multilevel,
        options={'levels': EXAMPLE3_LEVELS, 'layout': 'annuli',
                 'variance': 1e-2}),
    'example4': Preset(
        'example4', 'Four nested elliptical phases.',
        mu=40.0, K=4, generator=gen_multilevel,
        options={'levels': EXAMPLE4_LEVELS, 'layout': 'rings',
                 'variance': 1e-3}),
    'example5': Preset(
        'example5', '30 stripes with noise variance 1e-3.',
        mu=8.0, K=5, generator=gen_stripes, size=(140, 240),
        options={'n_stripes': 30, 'K': 5, 'variance': 1e-3}),
    'example6': Preset(
        'example6', 'Three phases lowered by 0.1 and 0.6 with noise variance 1e-2.',
        mu=8.0, K=3, generator=gen_close_intensity,
        options={'mask_kind': 'three-phase', 'variance': 1e-2,
                 'factor': (0.1, 0.6), 'stretch': False}),
    'example7': Preset(
        'example7', 'Four phases in two close pairs with noise variance 3e-2.',
        mu=4.0, K=4, generator=gen_multilevel,
        options={'levels': EXAMPLE7_LEVELS, 'layout': 'shapes',
                 'variance': 3e-2}),
    'retina-like': Preset(
        'retina-like', 'Thin curves at 1.0 (left) and 0.3 (right) with noise variance 0.1.',
        mu=25.0, K=3, generator=gen_thin_structures,
        options={'vessel_intensity_pair': (0.3, 1.0), 'variance': 0.1}),
}


def get_preset(name):
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f'Unknown preset: {name}. Choose from '
                         f'{", ".join(PRESETS)}.') from None
