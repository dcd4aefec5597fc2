"""Synthetic test images with known ground truth."""

import math

import numpy as np

from troftools.core import BinaryMask
from troftools.phantoms.base_phantom import BasePhantom, NoiseSpec

SHAPE_KINDS = ('rectangle', 'disk', 'triangle', 'ellipse')

LAYOUTS = ('shapes', 'rings', 'frames', 'bands', 'annuli')


def as_shape(size):
    """Return (height, width) from an int or a (height, width) pair."""
    if isinstance(size, int):
        return size, size
    height, width = size
    return int(height), int(width)


def shape_mask(rows, cols, kind, cy, cx, half):
    dy, dx = rows - cy, cols - cx
    if kind == 'rectangle':
        return (np.abs(dy) <= half) & (np.abs(dx) <= 0.8 * half)
    if kind == 'disk':
        return dy ** 2 + dx ** 2 <= half ** 2
    if kind == 'triangle':
        return (np.abs(dy) <= half) & (np.abs(dx) <= 0.5 * (dy + half))
    if kind == 'ellipse':
        return (dy / (0.6 * half)) ** 2 + (dx / half) ** 2 <= 1
    raise ValueError(f'Unknown shape: {kind}.')


def rank_labels(clean):
    """Label pixels by the rank of their clean intensity."""
    _, labels = np.unique(clean, return_inverse=True)
    return labels.reshape(clean.shape)


class MissingPixelPhantom(BasePhantom):
    """A bright disk on a dark background with pixels removed at random."""

    def __init__(self, width, height, fraction_removed=0.8, noise=None,
                 debug=False):
        if not 0 <= fraction_removed < 1:
            raise ValueError(f'fraction_removed must lie in [0, 1), got {fraction_removed}.')
        super().__init__('two-phase missing', width, height, noise=noise,
                         debug=debug)
        self.fraction_removed = fraction_removed

    def clean(self, rng):
        rows, cols = self.grid()
        labels = shape_mask(rows, cols, 'disk', 0.5, 0.5, 0.35).astype(np.int64)
        return labels.astype(np.float64), labels

    def degrade(self, noisy, rng):
        size = noisy.size
        count = math.floor(self.fraction_removed * size)
        removed = rng.choice(size, size=count, replace=False)
        missing = np.zeros(size, dtype=bool)
        missing[removed] = True
        missing = missing.reshape(noisy.shape)
        noisy = noisy.copy()
        noisy[missing] = 0.0
        return noisy, BinaryMask(missing)


class CloseIntensityPhantom(BasePhantom):
    """Constant 0.5 image with mask regions lowered by small factors."""

    mask_kinds = ('two-phase', 'three-phase')

    def __init__(self, width, height, mask_kind='two-phase', factors=(2e-4,),
                 mode='subtractive', noise=None, stretch=True, debug=False):
        if mask_kind not in self.mask_kinds:
            raise ValueError(f'Unknown mask kind: {mask_kind}.')
        factors = tuple(np.atleast_1d(np.asarray(factors, dtype=np.float64)).tolist())
        required = 1 if mask_kind == 'two-phase' else 2
        if len(factors) != required:
            raise ValueError(f'{mask_kind} mask requires {required} factor(s), '
                             f'{len(factors)} provided.')
        if mode not in ('subtractive', 'multiplicative'):
            raise ValueError(f'Unknown mode: {mode}.')
        super().__init__(f'close intensity {mask_kind}', width, height,
                         noise=noise, stretch=stretch, debug=debug)
        self.mask_kind = mask_kind
        self.factors = factors
        self.mode = mode

    def regions(self):
        rows, cols = self.grid()
        disk = shape_mask(rows, cols, 'disk', 0.5, 0.3, 0.2)
        block = shape_mask(rows, cols, 'rectangle', 0.5, 0.75, 0.3)
        if self.mask_kind == 'two-phase':
            return [disk | block]
        return [disk, block]

    def clean(self, rng):
        base = np.full(self.shape, 0.5)
        for region, factor in zip(self.regions(), self.factors):
            if self.mode == 'subtractive':
                base[region] = 0.5 - factor
            else:
                base[region] = 0.5 * (1.0 - factor)
        base = np.clip(base, 0.0, 1.0)
        return base, rank_labels(base)


class StripesPhantom(BasePhantom):
    """Vertical stripes with equally spaced intensities from 0 to 1.

    Ground truth merges adjacent stripes into K groups, one stripe per
    phase by default.
    """

    def __init__(self, width, height, n_stripes=30, K=None, noise=None,
                 debug=False):
        if n_stripes < 2:
            raise ValueError(f'At least 2 stripes required, got {n_stripes}.')
        if n_stripes > width:
            raise ValueError(f'{n_stripes} stripes do not fit in width {width}.')
        K = n_stripes if K is None else K
        if not 1 <= K <= n_stripes:
            raise ValueError(f'K must lie in [1, {n_stripes}], got {K}.')
        super().__init__(f'{n_stripes} stripes', width, height, noise=noise,
                         debug=debug)
        self.n_stripes = n_stripes
        self.K = K

    def clean(self, rng):
        cols = np.arange(self.width)
        stripe = (cols * self.n_stripes) // self.width
        groups = (stripe * self.K) // self.n_stripes
        values = stripe / (self.n_stripes - 1)
        clean = np.broadcast_to(values, self.shape).astype(np.float64)
        labels = np.broadcast_to(groups, self.shape).astype(np.int64)
        return clean, labels


class MultilevelPhantom(BasePhantom):
    """Piecewise constant cartoon at given intensity levels.

    Layouts: 'shapes' places one shape per non-background level on a
    grid, 'rings' nests ellipses, 'frames' nests rectangles whose edges
    never touch, 'bands' stacks horizontal bands and 'annuli' cuts
    concentric phases of equal area, darkest at the centre.
    """

    def __init__(self, width, height, levels, layout='shapes', noise=None,
                 debug=False):
        levels = np.asarray(getattr(levels, 'values', levels), dtype=np.float64)
        if levels.size < 1:
            raise ValueError('At least one level required.')
        if np.any(np.diff(levels) <= 0):
            raise ValueError(f'Levels must be strictly increasing: {levels}.')
        if layout not in LAYOUTS:
            raise ValueError(f'Unknown layout: {layout}.')
        super().__init__(f'{levels.size}-level {layout}', width, height,
                         noise=noise, debug=debug)
        self.levels = levels
        self.layout = layout

    def layout_labels(self):
        K = self.levels.size
        labels = np.zeros(self.shape, dtype=np.int64)
        if K == 1:
            return labels
        rows, cols = self.grid()
        if self.layout == 'shapes':
            n_shapes = K - 1
            per_side = math.ceil(math.sqrt(n_shapes))
            cell = 1.0 / per_side
            for s in range(n_shapes):
                r, c = divmod(s, per_side)
                mask = shape_mask(rows, cols, SHAPE_KINDS[s % len(SHAPE_KINDS)],
                                  (r + 0.5) * cell, (c + 0.5) * cell, 0.38 * cell)
                labels[mask] = s + 1
        elif self.layout == 'rings':
            for i in range(1, K):
                radius = 0.45 * (K - i) / (K - 1)
                inside = (((rows - 0.5) / radius) ** 2
                          + ((cols - 0.5) / (1.1 * radius)) ** 2) <= 1
                labels[inside] = i
        elif self.layout == 'frames':
            step = max(1, min(self.shape) // (2 * K))
            r, c = np.mgrid[0:self.height, 0:self.width]
            depth = np.minimum(np.minimum(r, c),
                               np.minimum(self.height - 1 - r, self.width - 1 - c))
            labels = np.minimum(depth // step, K - 1)
        elif self.layout == 'bands':
            r = np.arange(self.height)[:, np.newaxis]
            labels = np.broadcast_to((r * K) // self.height, self.shape).astype(np.int64)
        elif self.layout == 'annuli':
            radius = np.hypot(rows - 0.5, cols - 0.5)
            edges = np.quantile(radius, np.arange(1, K) / K)
            labels = np.searchsorted(edges, radius, side='left')
        return labels

    def clean(self, rng):
        labels = self.layout_labels()
        return self.levels[labels], labels


class ThinStructurePhantom(BasePhantom):
    """Thin random-walk curves, brighter on the left half than the right."""

    def __init__(self, width, height, vessel_intensity_pair=(0.3, 1.0),
                 n_curves=None, noise=None, debug=False):
        low, high = vessel_intensity_pair
        if not 0 < low < high <= 1:
            raise ValueError(f'Vessel intensities must satisfy 0 < low < high <= 1, '
                             f'got {vessel_intensity_pair}.')
        super().__init__('thin structures', width, height, noise=noise,
                         debug=debug)
        self.low = low
        self.high = high
        self.n_curves = n_curves if n_curves else max(6, max(width, height) // 10)

    def trace_curves(self, rng):
        vessels = np.zeros(self.shape, dtype=bool)
        steps = 2 * max(self.shape)
        for _ in range(self.n_curves):
            y = rng.uniform(0, self.height)
            x = rng.uniform(0, self.width)
            theta = rng.uniform(0, 2 * np.pi)
            turns = rng.normal(0.0, 0.25, steps)
            for turn in turns:
                row, col = int(y), int(x)
                if not (0 <= row < self.height and 0 <= col < self.width):
                    break
                vessels[row, col] = True
                if col + 1 < self.width:
                    vessels[row, col + 1] = True
                theta += turn
                y += np.sin(theta)
                x += np.cos(theta)
        return vessels

    def clean(self, rng):
        vessels = self.trace_curves(rng)
        left = np.arange(self.width)[np.newaxis, :] < self.width / 2
        labels = np.zeros(self.shape, dtype=np.int64)
        labels[vessels & ~left] = 1
        labels[vessels & left] = 2
        levels = np.array([0.0, self.low, self.high])
        return levels[labels], labels


def gen_two_phase_missing(size=128, fraction_removed=0.8, seed=0, variance=0.0,
                          debug=False):
    height, width = as_shape(size)
    return MissingPixelPhantom(width, height, fraction_removed,
                               noise=NoiseSpec(variance=variance, seed=seed),
                               debug=debug).generate()


def gen_close_intensity(size=128, mask_kind='two-phase', variance=1e-8,
                        factor=2e-4, seed=0, mode='subtractive', stretch=True,
                        debug=False):
    height, width = as_shape(size)
    return CloseIntensityPhantom(width, height, mask_kind=mask_kind,
                                 factors=factor, mode=mode,
                                 noise=NoiseSpec(variance=variance, seed=seed),
                                 stretch=stretch, debug=debug).generate()


def gen_stripes(n_stripes=30, size=(140, 240), variance=1e-3, seed=0, K=None,
                debug=False):
    height, width = as_shape(size)
    return StripesPhantom(width, height, n_stripes=n_stripes, K=K,
                          noise=NoiseSpec(variance=variance, seed=seed),
                          debug=debug).generate()


def gen_multilevel(levels, layout='shapes', variance=1e-2, seed=0, size=128,
                   debug=False):
    height, width = as_shape(size)
    return MultilevelPhantom(width, height, levels, layout=layout,
                             noise=NoiseSpec(variance=variance, seed=seed),
                             debug=debug).generate()


def gen_thin_structures(size=128, vessel_intensity_pair=(0.3, 1.0), variance=0.1,
                        seed=0, debug=False):
    height, width = as_shape(size)
    return ThinStructurePhantom(width, height, vessel_intensity_pair,
                                noise=NoiseSpec(variance=variance, seed=seed),
                                debug=debug).generate()
