"""quiltstream: 2D frame streams to native light-field display images.

Stages: depth estimation, N-view synthesis, quilt assembly, and LUT-driven
quilt-to-native mapping, wrapped in a real-time pipeline with a local
control service.
"""

from .calibration import (
    Calibration,
    EffectiveCalibration,
    derive_effective,
    parse_calibration,
    serialize_calibration,
    validate,
)
from .errors import QuiltStreamError
from .lut import LutMap, QuiltGeometry, build_lut, load_map, save_map, subpixel_view
from .native import (
    DirectMapper,
    quilt_to_native,
    reconstruct_view_samples,
    views_to_native_direct,
)
from .quilt import adapt_aspect, assemble_quilt, decimate, extract_views
from .viewsynth import ViewParams, ViewSet, inpaint, shift_for_view, synth_views

__version__ = "0.1.0"

__all__ = [
    "Calibration",
    "EffectiveCalibration",
    "derive_effective",
    "parse_calibration",
    "serialize_calibration",
    "validate",
    "QuiltStreamError",
    "LutMap",
    "QuiltGeometry",
    "build_lut",
    "load_map",
    "save_map",
    "subpixel_view",
    "DirectMapper",
    "quilt_to_native",
    "reconstruct_view_samples",
    "views_to_native_direct",
    "adapt_aspect",
    "assemble_quilt",
    "decimate",
    "extract_views",
    "ViewParams",
    "ViewSet",
    "inpaint",
    "shift_for_view",
    "synth_views",
    "__version__",
]
