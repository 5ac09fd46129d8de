from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..model import DynamicalModel, ModelConfig, as_model
from ..model.state import StateVector, Trajectory
from ..observation import CovarianceOp
from ..optim import OptimizeReport
from ..robust import HuberParams, Norm, ShrinkMode


@dataclass
class Var3dConfig:
    """3D-Var 求解配置

    outer_iters 同时用于 ADMM 与半二次迭代; l1_weight 是 ADMM 收缩阈值 l1_weight/mu
    中的权重, laplace_scale 只影响代价历史中 L1 项的尺度 1/lambda。
    """

    background_cov: CovarianceOp
    norm: Norm = Norm.L2
    huber: HuberParams = field(default_factory=HuberParams)
    outer_iters: int = 15
    mu0: float = 1.0
    rho: float = 1.6
    shrink_mode: ShrinkMode = ShrinkMode.ELEMENTWISE
    l1_weight: float = 1.0
    laplace_scale: float = 2.0
    tol_grad: Optional[float] = None
    max_iter: int = 200
    model: Any = None

    def __post_init__(self):
        self.norm = Norm(self.norm)
        self.shrink_mode = ShrinkMode(self.shrink_mode)
        if self.outer_iters < 1:
            raise ValueError(f"outer_iters 必须至少为 1: {self.outer_iters}")
        if self.mu0 <= 0:
            raise ValueError(f"mu0 必须为正: {self.mu0}")
        if self.rho <= 1:
            raise ValueError(f"rho 必须大于 1: {self.rho}")
        if self.l1_weight <= 0 or self.laplace_scale <= 0:
            raise ValueError("l1_weight 与 laplace_scale 必须为正")

    @property
    def dynamics(self) -> DynamicalModel:
        """预报所用模型, 未指定时为默认 Lorenz-96"""
        return as_model(self.model if self.model is not None else ModelConfig())


@dataclass
class Var4dConfig(Var3dConfig):
    """强约束 4D-Var 配置, window 为 (t0, tN), 为空时取背景时刻到最后观测时刻"""

    window: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        super().__post_init__()
        if self.window is not None:
            t0, t_end = self.window
            if t_end < t0:
                raise ValueError(f"同化窗口终点早于起点: {self.window}")


@dataclass
class AnalysisResult:
    analysis: StateVector
    norm: Norm
    cost_history: List[float] = field(default_factory=list)
    constraint_residual_history: List[float] = field(default_factory=list)
    inner_reports: List[OptimizeReport] = field(default_factory=list)
    iterate_history: List[np.ndarray] = field(default_factory=list)
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    trajectory: Optional[Trajectory] = None

    @property
    def final_residual(self) -> Optional[float]:
        if not self.constraint_residual_history:
            return None
        return self.constraint_residual_history[-1]

    @property
    def total_inner_iterations(self) -> int:
        return sum(r.iterations for r in self.inner_reports)
