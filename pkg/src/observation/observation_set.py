from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .covariance import CovarianceOp
from .operators import ObservationOperator
from ..exceptions import DimensionError, NonFiniteError


@dataclass(frozen=True, eq=False)
class ObservationSet:
    """某一时刻的观测: 观测值 y、误差协方差 R 与观测算子 H"""

    time: float
    values: np.ndarray
    obs_cov: CovarianceOp
    operator: ObservationOperator

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1:
            raise DimensionError("观测值必须是一维向量")
        if values.shape[0] != self.operator.output_dim:
            raise DimensionError(
                f"观测值长度 {values.shape[0]} 与观测算子输出维数 {self.operator.output_dim} 不一致"
            )
        if self.obs_cov.dim != values.shape[0]:
            raise DimensionError(f"观测误差协方差维数 {self.obs_cov.dim} 与观测长度 {values.shape[0]} 不一致")
        if not np.all(np.isfinite(values)):
            raise NonFiniteError(f"t={self.time} 的观测包含 NaN/Inf")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "time", float(self.time))

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def residual(self, x: np.ndarray) -> np.ndarray:
        """H(x) - y"""
        return self.operator(x) - self.values

    def with_data(self, values: Optional[np.ndarray] = None,
                  obs_cov: Optional[CovarianceOp] = None) -> "ObservationSet":
        """替换观测值和/或协方差, 其余保持不变"""
        return replace(
            self,
            values=self.values if values is None else values,
            obs_cov=self.obs_cov if obs_cov is None else obs_cov,
        )

    def subset(self, rows: Sequence[int]) -> "ObservationSet":
        rows = np.asarray(rows, dtype=int)
        return ObservationSet(
            self.time,
            self.values[rows],
            self.obs_cov.subset(rows),
            self.operator.restrict(rows),
        )
