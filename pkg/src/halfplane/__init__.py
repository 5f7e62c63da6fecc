"""One-parameter semigroups of holomorphic self-maps of the right half-plane."""

__version__ = "0.1.0"

from ._backend import BACKEND, available_backends
from .envelope import (EnvelopeBound, envelope_bounds, exam3_threshold, moebius_gamma,
                       moebius_threshold,
                       moebius_log_bound, verify_containment)
from .errors import (BranchAmbiguity, DegenerateEnvelope, DomainError, DomainExit, HalfPlaneError,
                     NewtonDiverged, NonConvergent, NotConverged, NumericOverflow,
                     OutOfRangeParameter, ParseError, PreconditionFailed, QuadratureFailure,
                     StepLimitExceeded, TailTooFat)
from .expr import parse_expression
from .flow import (FlowParams, Trajectory, check_semigroup_law, evolve, evolve_shifted, flow_map,
                   trajectory)
from .generators import (ArgEnvelope, Generator, SampleGrid, Sector, SemigroupType, affine,
                         angular_derivative_at_infinity, arg_envelope, check_flow_invariance,
                         check_range_halfplane, class_g, class_g_deltas, class_g_sector,
                         classify_type, evaluate, expression, moebius, parse_generator, power,
                         sector_of_analyticity)
from .hardy import (BlackBoxOperator, BoundaryQuadrature, HardyFunction, characterize_composition,
                    compose, composition_operator, contractive_extension_check,
                    dissipativity_pairing, e_n, hp_norm, operator_norm_law, phi_test)
from .koenigs import (InversionParams, KoenigsMap, abel_residual, analytic_extension,
                      convexity_direction_check, h_inverse)
