__version__ = '0.1.0'

from .tv_variants import TvVariant
from .core import (BinaryMask, GrayImage, PhasePartition, divergence,
                   gradient, mean_over, partition_from_thresholds, perimeter,
                   threshold_set, tv)
from .rof import RofParams, RofSolution, rof_energy, solve_rof, taut_string_1d
from .trof import (ThresholdVector, TrofParams, TrofResult, TrofSegmenter,
                   TrofTrace, segment)
