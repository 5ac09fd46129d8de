from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from ..exceptions import DimensionError
from ..observation import ObservationSet


class Norm(str, Enum):
    """同化问题中观测项所用的范数及求解方式"""

    L2 = "l2"
    L1_ADMM = "l1_admm"
    HUBER_ADMM = "huber_admm"
    HUBER_HQ = "huber_hq"

    @property
    def is_admm(self) -> bool:
        return self in (Norm.L1_ADMM, Norm.HUBER_ADMM)


@dataclass
class AdmmState:
    """ADMM 迭代量: 辅助变量 z、乘子 lambda、罚参数 mu 及其增长率 rho"""

    z: np.ndarray
    lam: np.ndarray
    mu: float = 1.0
    rho: float = 1.6
    outer_iter: int = 0

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float)
        self.lam = np.asarray(self.lam, dtype=float)
        if self.z.shape != self.lam.shape:
            raise DimensionError(f"z 与 lambda 长度不一致: {self.z.shape} vs {self.lam.shape}")
        if self.mu <= 0:
            raise ValueError(f"罚参数 mu 必须为正: {self.mu}")
        if self.rho <= 1:
            raise ValueError(f"罚参数增长率 rho 必须大于 1: {self.rho}")

    @classmethod
    def initial(cls, d0: np.ndarray, mu0: float = 1.0, rho: float = 1.6) -> "AdmmState":
        """z^0 取背景的缩放新息, lambda^0 = 0"""
        d0 = np.asarray(d0, dtype=float)
        return cls(d0.copy(), np.zeros_like(d0), mu0, rho)

    def update_multipliers(self, d: np.ndarray):
        """lambda <- lambda - d + z"""
        self.lam = self.lam - np.asarray(d, dtype=float) + self.z

    def grow_penalty(self):
        self.mu *= self.rho
        self.outer_iter += 1

    def residual(self, d: np.ndarray) -> float:
        return float(np.linalg.norm(np.asarray(d, dtype=float) - self.z))


def modified_observations(obs: ObservationSet, st: AdmmState) -> ObservationSet:
    """y' = y + R^{1/2}(z + lambda/mu), R' = R/mu"""
    shift = obs.obs_cov.sqrt_apply(st.z + st.lam / st.mu)
    return obs.with_data(values=obs.values + shift, obs_cov=obs.obs_cov.scaled(1.0 / st.mu))


@dataclass
class AdmmOutcome:
    x: np.ndarray
    state: AdmmState
    cost_history: List[float] = field(default_factory=list)
    residual_history: List[float] = field(default_factory=list)
    mu_history: List[float] = field(default_factory=list)
    iterates: List[np.ndarray] = field(default_factory=list)
    reports: List[Any] = field(default_factory=list)


def run_admm(
    x0: np.ndarray,
    innovation: Callable[[np.ndarray], np.ndarray],
    solve_x: Callable[[np.ndarray, AdmmState], Tuple[np.ndarray, Any]],
    shrink: Callable[[float, np.ndarray, np.ndarray], np.ndarray],
    objective: Callable[[np.ndarray], float],
    outer_iters: int,
    mu0: float = 1.0,
    rho: float = 1.6,
    on_iteration: Optional[Callable[[int, Dict[str, float]], None]] = None,
) -> AdmmOutcome:
    """通用 ADMM 外循环

    每次外迭代: 以修正数据求解 x, 计算缩放新息 d, 收缩得到 z, 更新 lambda, 最后放大 mu。
    """
    if outer_iters < 1:
        raise ValueError(f"外迭代次数必须至少为 1: {outer_iters}")
    x = np.asarray(x0, dtype=float).copy()
    state = AdmmState.initial(innovation(x), mu0, rho)
    outcome = AdmmOutcome(x=x, state=state)

    for k in range(outer_iters):
        x, report = solve_x(x, state)
        d = innovation(x)
        state.z = shrink(state.mu, d, state.lam)
        residual = state.residual(d)
        state.update_multipliers(d)

        outcome.reports.append(report)
        outcome.residual_history.append(residual)
        outcome.mu_history.append(state.mu)
        outcome.cost_history.append(objective(x))
        outcome.iterates.append(x.copy())
        if on_iteration is not None:
            on_iteration(k, {"residual": residual, "mu": state.mu, "cost": outcome.cost_history[-1]})
        state.grow_penalty()

    outcome.x = x
    return outcome
