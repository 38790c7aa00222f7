"""First-order rigidity of multigrid parallelogram tilings."""
from __future__ import annotations

from .bracing import BracingPattern, braces_graph, checkered_pattern, congruence_class_pattern, predict_rigidity
from .dualize import dualize, square_patch, verify_dual_consistency, working_patch
from .errors import GeometryError, IllConditionedError, InputError, QuasirigidError
from .flexbasis import build_ribbon_shears, expand_flex, ribbon_direction, ribbon_figure
from .geometry import AffineGrid, MultigridSpec, pentagrid_preset, square_grid_preset, tetragrid_preset
from .rigidity import Framework, flex_space, is_infinitesimally_rigid
from .tiling import Tiling, export_tiling, import_tiling
from .zeromode import Multiphase, band_zero_mode, spectrum_sample, star_classes, symbol_matrix

__version__ = "0.1.0"

__all__ = [
    "AffineGrid", "BracingPattern", "Framework", "GeometryError", "IllConditionedError",
    "InputError", "MultigridSpec", "Multiphase", "QuasirigidError", "Tiling",
    "band_zero_mode", "braces_graph", "build_ribbon_shears", "checkered_pattern",
    "congruence_class_pattern", "dualize", "expand_flex", "export_tiling", "flex_space",
    "import_tiling", "is_infinitesimally_rigid", "pentagrid_preset", "predict_rigidity",
    "ribbon_direction", "ribbon_figure", "spectrum_sample", "square_grid_preset",
    "square_patch", "star_classes", "symbol_matrix", "tetragrid_preset",
    "verify_dual_consistency", "working_patch",
]
