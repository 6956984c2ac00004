"""Pseudo-spectral tools for 2D incompressible flow on the unit torus.

Coupled systems: the viscous flow itself, a nudged copy assimilating coarse
observations of it, viscosity-sensitivity equations for both, and difference
quotients in the viscosity parameter, together with the diagnostics and
experiment drivers that certify their expected behavior at desk scale.
"""

from .diagnostics import (
    BoundCheck,
    IdentityReport,
    check_apriori,
    grashof,
    identity_suite,
    trajectory_grashof,
)
from .dynamics import (
    PhysicsParams,
    SystemKind,
    SystemSpec,
    dq_field,
    rhs_da,
    rhs_da_dq,
    rhs_da_sens,
    rhs_dq,
    rhs_nse,
    rhs_sens,
    with_viscosity2,
)
from .experiments import (
    DQSweepSpec,
    ExperimentReport,
    forcing_for_grashof,
    run_da_dq_convergence,
    run_da_sync,
    run_dq_convergence,
    run_reynolds_switch,
    run_taylor_green_suite,
    taylor_green_flow,
    taylor_green_quotient,
    taylor_green_sensitivity,
    trajectory_distance,
)
from .interpolants import (
    BoxAverage,
    InterpolantBoundReport,
    SpectralProjection,
    admissibility,
    interpolate,
    verify_bound,
)
from .runconfig import ConfigError, RunConfig, load_config
from .spectral import (
    LAMBDA_1,
    GridSpec,
    NormTriple,
    SpectralField,
    bilinear,
    inner,
    leray_project,
    norm,
    norms,
    random_field,
    stokes_apply,
    taylor_green,
)
from .storage import (
    SnapshotFormatError,
    emit_diagnostics_csv,
    read_snapshot,
    save_report,
    write_snapshot,
)
from .timestepper import (
    AdmissibilityError,
    AdmissibilityWarning,
    BlowupError,
    CFLWarning,
    ConvergenceResult,
    SolverConfig,
    Trajectory,
    integrate,
    step_convergence_order,
)

__all__ = [
    "AdmissibilityError",
    "AdmissibilityWarning",
    "BlowupError",
    "BoundCheck",
    "BoxAverage",
    "CFLWarning",
    "ConfigError",
    "ConvergenceResult",
    "DQSweepSpec",
    "ExperimentReport",
    "GridSpec",
    "IdentityReport",
    "InterpolantBoundReport",
    "LAMBDA_1",
    "NormTriple",
    "PhysicsParams",
    "RunConfig",
    "SnapshotFormatError",
    "SolverConfig",
    "SpectralField",
    "SpectralProjection",
    "SystemKind",
    "SystemSpec",
    "Trajectory",
    "admissibility",
    "bilinear",
    "check_apriori",
    "dq_field",
    "emit_diagnostics_csv",
    "forcing_for_grashof",
    "grashof",
    "identity_suite",
    "inner",
    "integrate",
    "interpolate",
    "leray_project",
    "load_config",
    "norm",
    "norms",
    "random_field",
    "read_snapshot",
    "rhs_da",
    "rhs_da_dq",
    "rhs_da_sens",
    "rhs_dq",
    "rhs_nse",
    "rhs_sens",
    "run_da_dq_convergence",
    "run_da_sync",
    "run_dq_convergence",
    "run_reynolds_switch",
    "run_taylor_green_suite",
    "save_report",
    "step_convergence_order",
    "stokes_apply",
    "taylor_green",
    "taylor_green_flow",
    "taylor_green_quotient",
    "taylor_green_sensitivity",
    "trajectory_distance",
    "trajectory_grashof",
    "verify_bound",
    "with_viscosity2",
]
