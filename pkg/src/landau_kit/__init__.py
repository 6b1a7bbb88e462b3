"""Ratio-chained cones, admissible-cosine volumes and Dirichlet-series extension probes."""
from .cone_core import (Cone, GammaShift, HalfspaceSystem, cone_decompose, gamma_max, generators,
                        in_brho, in_neg_polar, make_cone, nested_p, polar_halfspaces)
from .dirichlet_engine import (ProbeReport, TaylorExpansion, abscissa_abs_estimate,
                               cauchy_tail_scan, double_series_check, eval_partial, landau_probe,
                               radius_estimate, taylor_coeffs)
from .errors import (DegenerateExpansion, DimensionMismatch, IndexOutOfRange, InvalidParameter,
                     LandauKitError, NotDisjoint)
from .sequences import (BlockVectors, CoefficientSequence, CounterexampleParams, ValidationReport,
                        block_inequality_slack, block_vectors, builtin_sequences,
                        gen_counterexample_I, gen_counterexample_II, key_inequality_ratio,
                        validate_theorem_T)
from .volume import (Rectangle, VolumeReport, lower_bound, mc_volume, packing_volume,
                     rectangles_ge1, rectangles_lt1, verify_disjoint)

__version__ = "0.1.0"
