from .base_phantom import BasePhantom, GroundTruth, NoiseSpec
from .phantoms import (CloseIntensityPhantom, MissingPixelPhantom,
                       MultilevelPhantom, StripesPhantom,
                       ThinStructurePhantom, gen_close_intensity,
                       gen_multilevel, gen_stripes, gen_thin_structures,
                       gen_two_phase_missing)
from .presets import PRESETS, Preset, get_preset
