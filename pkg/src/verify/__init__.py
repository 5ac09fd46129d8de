from .oracles import (
    CheckResult,
    CorruptedAdjointModel,
    check_3dvar_kalman,
    check_adjoint_identity,
    check_ensrf_kalman,
    check_gradient,
    check_prox,
    check_rk4_order,
    run_all_checks,
)

__all__ = [
    "CheckResult",
    "CorruptedAdjointModel",
    "check_3dvar_kalman",
    "check_adjoint_identity",
    "check_ensrf_kalman",
    "check_gradient",
    "check_prox",
    "check_rk4_order",
    "run_all_checks",
]
