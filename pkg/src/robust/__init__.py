from .admm import AdmmOutcome, AdmmState, Norm, modified_observations, run_admm
from .norms import (
    HuberParams,
    ScaledInnovation,
    hq_modified_covariance,
    hq_surrogate,
    hq_weights,
    huber_elementwise,
    huber_norm,
    laplace_loglik,
    laplace_sample,
    scaled_innovation,
)
from .shrinkage import ShrinkMode, huber_shrinkage, l1_shrinkage, soft_threshold

__all__ = [
    "AdmmOutcome",
    "AdmmState",
    "HuberParams",
    "Norm",
    "ScaledInnovation",
    "ShrinkMode",
    "hq_modified_covariance",
    "hq_surrogate",
    "hq_weights",
    "huber_elementwise",
    "huber_norm",
    "huber_shrinkage",
    "l1_shrinkage",
    "laplace_loglik",
    "laplace_sample",
    "modified_observations",
    "run_admm",
    "scaled_innovation",
    "soft_threshold",
]
