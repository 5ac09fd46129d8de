from abc import ABC, abstractmethod

import numpy as np

from ..exceptions import DimensionError


class DynamicalModel(ABC):
    """动力模型基类

    rhs / jvp / vjp 沿第 0 轴作用, 因此既接受单个状态 (n,) 也接受集合矩阵 (n, N)。
    """

    @property
    @abstractmethod
    def dim(self) -> int:
        """状态维数"""
        pass

    @property
    @abstractmethod
    def dt(self) -> float:
        """积分步长"""
        pass

    @abstractmethod
    def rhs(self, x: np.ndarray) -> np.ndarray:
        """右端项 dx/dt"""
        pass

    @abstractmethod
    def jvp(self, x: np.ndarray, dx: np.ndarray) -> np.ndarray:
        """右端项的雅可比矩阵作用于扰动"""
        pass

    @abstractmethod
    def vjp(self, x: np.ndarray, a: np.ndarray) -> np.ndarray:
        """雅可比矩阵转置作用于伴随变量"""
        pass

    @abstractmethod
    def jacobian(self, x: np.ndarray) -> np.ndarray:
        """稠密雅可比矩阵, 用于小规模检验"""
        pass

    @abstractmethod
    def with_dt(self, dt: float) -> "DynamicalModel":
        """返回仅步长不同的同一模型"""
        pass

    def check_dim(self, x: np.ndarray, name: str = "x") -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.dim:
            raise DimensionError(f"{name} 的维数为 {x.shape[0]}, 模型维数为 {self.dim}")
        return x
