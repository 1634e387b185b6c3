"""Axially symmetric mean field solutions on the unit sphere.

Shooting in the stereographic plane, bifurcation tracing in the shooting
parameter, reconstruction of sphere fields, integral-identity validation,
and an independent collocation cross-check.
"""

from .branch_tracer import (
    BetaProfile,
    BifurcationTable,
    BranchRoot,
    RootScan,
    TangencySuspect,
    beta_derivatives_at,
    find_roots,
    sample_profile,
    scan_roots,
    trace_branches,
)
from .collocation_crosscheck import (
    CollocationProblem,
    linearized_spectrum,
    solve_bvp,
)
from .errors import (
    EmptyScan,
    GridExceedsTrajectory,
    MeanFieldError,
    NoConvergence,
    SingularJacobian,
    StepFailure,
    TailDivergence,
)
from .identity_validators import (
    ValidationReport,
    check_axisym_rigidity_at_6,
    check_kw_first_order,
    check_second_order,
    check_triple_products,
    validate_field,
)
from .radial_ode import (
    ProblemParams,
    RadialSolution,
    ShootingConfig,
    compute_beta,
    integrate_radial,
    series_start,
)
from .sphere_field import (
    SphereField,
    colatitude_grid,
    equation_curvature,
    field_for_root,
    gauss_curvature,
    reconstruct,
)

__version__ = "0.1.0"
