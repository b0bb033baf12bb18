"""Verification toolkit for second-order sufficient optimality conditions in
nonlinear semidefinite optimization."""

from .cone import (
    dist_psd,
    is_psd,
    normal_cone_contains,
    project_psd,
    tangent_cone_contains,
    tangent_cone_contains_oracle,
)
from .nlsdp import (
    NlsdpProblem,
    QuadraticMatrixMap,
    QuadraticScalar,
    adjoint_dF,
    dF,
    d2F,
    eval_F,
    eval_f,
    grad_f,
    hess_f,
    lagrangian_grad,
    lagrangian_hess_form,
    problem_from_json,
)
from .sosc import (
    CRITICAL_CONE_TRIVIAL,
    FAILED_AT_DIRECTION,
    INCONCLUSIVE,
    VERIFIED_SAMPLED,
    GrowthReport,
    InfeasiblePointError,
    MultiplierCandidate,
    SoscOptions,
    SoscReport,
    check_sosc,
    critical_cone_contains,
    find_multiplier,
    sample_critical_directions,
    sosc_margin,
    verify_growth,
)
from .subderivative import (
    ExtendedReal,
    HypothesisViolation,
    NoFeasibleSampleError,
    PivotNotPositiveDefinite,
    ToleranceAnomalyError,
    estimate_subderivative_sampling,
    recovery_sequence,
    schur_feasibility,
    second_subderivative,
    subderivative_sampling_trace,
)
from .symmat import (
    JacobiConvergenceError,
    OrderedEigenDecomposition,
    SymMat,
    block,
    conjugate,
    eigen_decompose,
    frobenius_inner,
    pseudoinverse,
)

__version__ = "0.1.0"
