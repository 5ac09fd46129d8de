from .types import AnalysisResult, Var3dConfig, Var4dConfig
from .var3d import (
    cycle_3dvar,
    l2_cost,
    solve_3dvar,
    solve_huber_3dvar_admm,
    solve_huber_3dvar_hq,
    solve_l1_3dvar,
    solve_l2_3dvar,
)
from .var4d import (
    FourDVarCost,
    StackedInnovation,
    solve_4dvar,
    solve_huber_4dvar_admm,
    solve_huber_4dvar_hq,
    solve_l1_4dvar,
    solve_l2_4dvar,
)

__all__ = [
    "AnalysisResult",
    "FourDVarCost",
    "StackedInnovation",
    "Var3dConfig",
    "Var4dConfig",
    "cycle_3dvar",
    "l2_cost",
    "solve_3dvar",
    "solve_4dvar",
    "solve_huber_3dvar_admm",
    "solve_huber_3dvar_hq",
    "solve_huber_4dvar_admm",
    "solve_huber_4dvar_hq",
    "solve_l1_3dvar",
    "solve_l1_4dvar",
    "solve_l2_3dvar",
    "solve_l2_4dvar",
]
