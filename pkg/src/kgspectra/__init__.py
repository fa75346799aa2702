"""kgspectra: bound states and comparison theorems for the radial
Klein-Gordon equation with attractive vector potentials in d >= 1.
"""

from .analysis import (
    ComparisonReport,
    DerivativeReport,
    FoldProximityError,
    Theorem2Report,
    check_theorem1,
    check_theorem2,
    comparison_identity,
    expectation,
    fd_derivative,
    hf_derivative,
    weight_function,
)
from .continuation import (
    CurvePoint,
    SpectralCurve,
    solve_for_parameter,
    sweep_parameter,
    trace_folded_curve,
)
from .eigensolve import (
    EigenResult,
    EnergyBracket,
    NonConvergenceError,
    SolverConfig,
    SolverError,
    UnboundStateError,
    bracket_scan,
    find_state,
    normalize,
    resolve_grid,
)
from .potentials import (
    AdmissibilityReport,
    PotentialError,
    PotentialFamily,
    eval_param_derivative,
    eval_potential,
    format_potential,
    parse_potential,
    validate_admissible,
    with_param,
    with_sweep,
)
from .radial import (
    RadialGrid,
    RadialProblem,
    ShootResult,
    angular_constant,
    effective_L,
    integrate_at_energy,
    series_start,
)

__version__ = "0.1.0"
