"""hypertile: hyperbolicity diagnostics, cone metrics, stacked tilings,
boundary-map lifts, and tile-wise bi-Lipschitz approximation."""

__version__ = "0.1.0"

from .errors import DomainError, InputError, TilingError
from .sampling import Box, Sampler
from .spaces import (SpaceHandle, bump_half_plane, complex_hyperbolic, con_of, distance,
                     euclidean, half_space, heisenberg, twisted, twisted_half_space)
from .metric import (DistortionReport, QiConstants, QsModulus, check_quasi_symmetry,
                     delta_four_point_estimate, fit_qi_constants, fit_qs_modulus,
                     gromov_product, injectivity_scale_check, PairSet)
from .cone import ConPoint, RaySpec, con_distance, parabolic_quasimetric, ray_point, visual_quasimetric
from .tiling import (StackedTilingSpec, TileGraph, TileId, adjacency_graph, builtin_spec,
                     decompose_tile, graph_distance, greedy_coloring, normalize_map,
                     tiles_in_window, verify_stacked_tiling)
from .lifting import (BoundaryMap, CallableBoundaryMap, LiftParams, LiftedMap, affine_map,
                      heis_dilation_map, heis_translation_map, lift_distortion, lift_eval,
                      power_map, table_map, tau)
from .pipeline import (ApproxReport, PipelineConfig, PLMap2D, blend_collar, measure_bilipschitz,
                       pl_approximate_tile, run_pipeline)

__all__ = [name for name in dir() if not name.startswith("_")]
