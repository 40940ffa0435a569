"""
Almost-exact interior point methods for linear optimization with an
emulated quantum linear-system oracle.

The quantum subroutine (block-encoded linear solve followed by state
tomography) is replaced by a classical oracle that returns a noisy unit
direction plus norm estimates and charges a QRAM query cost per call.  On
top of it sit the refined inexact solver, the short-step dual log-barrier
method, its iterative-refinement wrapper and exact rounding.
"""
from .centering import (center_dual, centering_mu, dual_start, exact_dual_newton_step,
                        primal_estimate, proximity)
from .dual_ipm import (IPMConfig, PerturbationLedger, Trajectory, check_error_conditions,
                       run_dual, run_ifqipm_oss)
from .errors import (BinaryLengthUndefined, DegenerateSystemError, InfeasibleStartError,
                     MPSParseError, NonConvergenceError, PositivityLossError, QIPMError,
                     RankDeficientError, RoundingFailedError, ZeroRHSError)
from .generators import (generate_centered_instance, generate_degenerate_instance,
                         generate_integer_instance)
from .icqlsa import RefineTrace, refine_solve, solve_normal_system
from .newton import (build_augmented, build_nes, build_oss, equilibrate, nullspace_basis,
                     recover_dual_step, recover_oss_directions)
from .oracle import (DirectionEstimate, OracleConfig, QLSOracle, QueryCostModel,
                     condition_estimate, estimate_direction, query_cost)
from .problem import (DualIterate, InstanceMetadata, LOProblem, Partition, PrimalDualIterate,
                      binary_length, complementarity_mu, synthetic_binary_length)
from .refinement import (RefinementState, construct_refining, project_dual, round_to_optimal,
                         run_ir)
from .scalar import F64, ExtendedBackend, get_backend

__version__ = "0.1.0"
