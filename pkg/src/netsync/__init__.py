"""Synchronization bounds and adaptive pinning for mismatched oscillator networks."""

from .certify import (
    BoundFitParams,
    Certificate,
    ValidationDomain,
    compute_certificate,
    fit_alpha_beta,
    lambda_star,
    lorenz_F,
    lorenz_Gamma,
    symmetric_part,
    theorem1_bound,
    theorem2_feasibility,
    validate_assumption2,
    validate_assumption3,
)
from .control import ControllerConfig, AugmentedState, closed_loop_rhs, network_rhs_closed_loop
from .dynamics import (
    LorenzParams,
    LorenzSystem,
    MismatchSet,
    SystemModel,
    average_error,
    network_rhs_open_loop,
    open_loop_rhs,
    sample_mismatches,
)
from .graph import Topology, global_coupling_matrix, is_connected, laplacian, spectrum
from .integrate import IntegratorConfig, TrajectoryLog, rk4_step, simulate

__version__ = "0.1.0"
