from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Sequence, Union

import numpy as np

from ..exceptions import DimensionError, NonFiniteError
from ..model.state import StateVector
from ..observation import CovarianceOp, ObservationOperator


@dataclass(eq=False)
class Ensemble:
    """集合成员矩阵 (n, N) 及其派生量

    deviations 为原始偏差 X = E - mean (不含 1/sqrt(N-1) 因子);
    obs_deviations 为各成员观测值减去观测均值 Y。
    """

    members: np.ndarray
    time: float = 0.0
    operator: Optional[ObservationOperator] = None

    def __post_init__(self):
        self.members = np.array(self.members, dtype=float)
        if self.members.ndim != 2:
            raise DimensionError(f"集合成员矩阵必须是二维 (n, N), 实际形状 {self.members.shape}")
        if self.members.shape[1] < 2:
            raise ValueError(f"集合成员数必须至少为 2, 实际为 {self.members.shape[1]}")
        if not np.all(np.isfinite(self.members)):
            raise NonFiniteError(f"t={self.time} 的集合包含 NaN/Inf")
        self.time = float(self.time)

    @property
    def dim(self) -> int:
        return self.members.shape[0]

    @property
    def n_ens(self) -> int:
        return self.members.shape[1]

    @cached_property
    def mean(self) -> np.ndarray:
        return self.members.mean(axis=1)

    @cached_property
    def deviations(self) -> np.ndarray:
        return self.members - self.mean[:, None]

    @cached_property
    def obs_members(self) -> np.ndarray:
        if self.operator is None:
            raise ValueError("集合未指定观测算子")
        return self.operator(self.members)

    @cached_property
    def obs_mean(self) -> np.ndarray:
        return self.obs_members.mean(axis=1)

    @cached_property
    def obs_deviations(self) -> np.ndarray:
        return self.obs_members - self.obs_mean[:, None]

    def covariance(self) -> np.ndarray:
        """样本协方差 X X^T / (N - 1)"""
        return self.deviations @ self.deviations.T / (self.n_ens - 1)

    def observed(self, operator: ObservationOperator) -> "Ensemble":
        if operator is self.operator:
            return self
        return Ensemble(self.members, self.time, operator)

    def member(self, index: int) -> StateVector:
        return StateVector(self.members[:, index], self.time)

    def states(self) -> List[StateVector]:
        return [self.member(i) for i in range(self.n_ens)]

    def mean_state(self) -> StateVector:
        return StateVector(self.mean, self.time)

    def inflated(self, factor: float) -> "Ensemble":
        """乘性膨胀偏差"""
        if factor <= 0:
            raise ValueError(f"膨胀因子必须为正: {factor}")
        if factor == 1.0:
            return self
        return Ensemble(self.mean[:, None] + factor * self.deviations, self.time, self.operator)

    def from_weights(self, mean_weights: np.ndarray, transform: np.ndarray) -> "Ensemble":
        """x^a<l> = mean + X (w_mean + W[:, l])"""
        weights = np.asarray(mean_weights, dtype=float)[:, None] + np.asarray(transform, dtype=float)
        return Ensemble(self.mean[:, None] + self.deviations @ weights, self.time, self.operator)


def ensemble_stats(members: Union[np.ndarray, Sequence[StateVector]],
                   operator: Optional[ObservationOperator] = None,
                   time: Optional[float] = None) -> Ensemble:
    """由成员 (矩阵或状态列表) 构造集合及其统计量"""
    if isinstance(members, np.ndarray):
        matrix = members
        t = 0.0 if time is None else time
    else:
        members = list(members)
        if len(members) < 2:
            raise ValueError(f"集合成员数必须至少为 2, 实际为 {len(members)}")
        matrix = np.column_stack([m.values for m in members])
        t = members[0].time if time is None else time
    return Ensemble(matrix, t, operator)


def make_initial_ensemble(mean: StateVector, background_cov: CovarianceOp, n_ens: int,
                          rng: np.random.Generator) -> Ensemble:
    """背景均值加上由 B 抽取的高斯扰动"""
    noise = rng.standard_normal((mean.dim, n_ens))
    return Ensemble(mean.values[:, None] + background_cov.sqrt_apply(noise), mean.time)
