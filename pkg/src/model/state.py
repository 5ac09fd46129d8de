from dataclasses import dataclass, field
from typing import Iterator, List, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..exceptions import DimensionError, NonFiniteError

TIME_TOL = 1e-9


class ModelConfig(BaseModel):
    """Lorenz-96 模型配置"""

    model_config = ConfigDict(extra="forbid")

    n: int = Field(40, ge=4, description="状态维数, 循环模板需要至少 4 个分量")
    forcing: float = Field(8.0, description="外强迫 F")
    dt: float = Field(0.005, gt=0, description="RK4 步长")
    spinup: float = Field(1.0, ge=0, description="参考解的预热时长")


@dataclass(frozen=True, eq=False)
class StateVector:
    """带时间戳的模型状态"""

    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1:
            raise DimensionError(f"状态向量必须是一维的, 实际形状 {values.shape}")
        if not np.all(np.isfinite(values)):
            raise NonFiniteError(f"状态向量在 t={self.time} 处包含 NaN/Inf")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "time", float(self.time))

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def with_values(self, values: np.ndarray) -> "StateVector":
        return StateVector(values, self.time)

    def at_time(self, time: float) -> "StateVector":
        return StateVector(self.values, time)


@dataclass(eq=False)
class Trajectory:
    """按时间排序的状态序列, 以 (时间, 状态矩阵) 紧凑存储

    values 的第 k 行是 times[k] 时刻的状态。
    """

    times: np.ndarray
    values: np.ndarray
    _states: List[StateVector] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[0] != self.times.shape[0]:
            raise DimensionError(
                f"轨迹时间数 {self.times.shape[0]} 与状态矩阵形状 {self.values.shape} 不一致"
            )
        if self.times.size == 0:
            raise ValueError("轨迹至少需要一个状态")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("轨迹时间必须严格递增")
        if not np.all(np.isfinite(self.values)):
            raise NonFiniteError("轨迹包含 NaN/Inf")

    @classmethod
    def from_states(cls, states: Sequence[StateVector]) -> "Trajectory":
        if not states:
            raise ValueError("轨迹至少需要一个状态")
        dims = {s.dim for s in states}
        if len(dims) != 1:
            raise DimensionError(f"轨迹中的状态维数不一致: {sorted(dims)}")
        return cls(
            np.array([s.time for s in states]),
            np.vstack([s.values for s in states]),
        )

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def states(self) -> List[StateVector]:
        if self._states is None:
            self._states = [StateVector(v, t) for t, v in zip(self.times, self.values)]
        return self._states

    @property
    def initial(self) -> StateVector:
        return StateVector(self.values[0], self.times[0])

    @property
    def final(self) -> StateVector:
        return StateVector(self.values[-1], self.times[-1])

    def __len__(self) -> int:
        return self.times.shape[0]

    def __getitem__(self, index: int) -> StateVector:
        return StateVector(self.values[index], self.times[index])

    def __iter__(self) -> Iterator[StateVector]:
        return iter(self.states)

    def index_of(self, time: float) -> int:
        """返回给定时刻在轨迹中的下标"""
        idx = int(np.argmin(np.abs(self.times - time)))
        if abs(self.times[idx] - time) > TIME_TOL * max(1.0, abs(time)):
            raise KeyError(f"轨迹中没有 t={time} 的状态")
        return idx

    def at(self, time: float) -> StateVector:
        return self[self.index_of(time)]

    def concat(self, other: "Trajectory") -> "Trajectory":
        """拼接首尾相接的两段轨迹 (other 的起点与本轨迹终点重合)"""
        if abs(other.times[0] - self.times[-1]) > TIME_TOL:
            raise ValueError("拼接的轨迹段首尾时间不一致")
        return Trajectory(
            np.concatenate([self.times, other.times[1:]]),
            np.vstack([self.values, other.values[1:]]),
        )
