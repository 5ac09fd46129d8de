from .base import DynamicalModel
from .integrator import (
    adjoint,
    as_model,
    forecast,
    integrate,
    observed_order,
    propagate_ensemble,
    rk4_step,
    step_sizes,
    tangent_linear,
)
from .linear import LinearModel
from .lorenz96 import Lorenz96Model, lorenz96_rhs
from .state import ModelConfig, StateVector, Trajectory

__all__ = [
    "DynamicalModel",
    "LinearModel",
    "Lorenz96Model",
    "ModelConfig",
    "StateVector",
    "Trajectory",
    "adjoint",
    "as_model",
    "forecast",
    "integrate",
    "lorenz96_rhs",
    "observed_order",
    "propagate_ensemble",
    "rk4_step",
    "step_sizes",
    "tangent_linear",
]
