from .ensemble import Ensemble, ensemble_stats, make_initial_ensemble
from .ensrf import WeightAnalysis, ensrf_analysis, ensrf_weight_cost, weight_solve
from .letkf import LocalizationConfig, cyclic_distance, letkf_cycle, local_analysis, local_rows
from .robust_enkf import (
    EnkfConfig,
    analyze_weights,
    huber_enkf_admm_analysis,
    huber_enkf_analysis,
    l1_enkf_analysis,
    robust_ensemble_analysis,
)

__all__ = [
    "EnkfConfig",
    "Ensemble",
    "LocalizationConfig",
    "WeightAnalysis",
    "analyze_weights",
    "cyclic_distance",
    "ensemble_stats",
    "ensrf_analysis",
    "ensrf_weight_cost",
    "huber_enkf_admm_analysis",
    "huber_enkf_analysis",
    "l1_enkf_analysis",
    "letkf_cycle",
    "local_analysis",
    "local_rows",
    "make_initial_ensemble",
    "robust_ensemble_analysis",
    "weight_solve",
]
