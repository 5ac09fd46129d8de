import numpy as np
from scipy.linalg import expm

from .base import DynamicalModel
from ..exceptions import DimensionError


class LinearModel(DynamicalModel):
    """线性测试模型 dx/dt = A x"""

    def __init__(self, matrix: np.ndarray, dt: float = 0.01):
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        if matrix.shape[0] != matrix.shape[1]:
            raise DimensionError(f"线性模型矩阵必须是方阵, 实际形状 {matrix.shape}")
        if dt <= 0:
            raise ValueError(f"步长必须为正: {dt}")
        self.matrix = matrix
        self._dt = float(dt)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def dt(self) -> float:
        return self._dt

    def rhs(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    def jvp(self, x: np.ndarray, dx: np.ndarray) -> np.ndarray:
        return self.matrix @ dx

    def vjp(self, x: np.ndarray, a: np.ndarray) -> np.ndarray:
        return self.matrix.T @ a

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        return self.matrix.copy()

    def with_dt(self, dt: float) -> "LinearModel":
        return LinearModel(self.matrix, dt)

    def step_matrix(self, h: float) -> np.ndarray:
        """一步 RK4 对应的传播矩阵 I + hA + (hA)^2/2 + (hA)^3/6 + (hA)^4/24"""
        ha = h * self.matrix
        eye = np.eye(self.dim)
        return eye + ha @ (eye + ha @ (eye / 2 + ha @ (eye / 6 + ha / 24)))

    def propagator(self, t: float) -> np.ndarray:
        """连续流的精确传播矩阵 exp(tA)"""
        return expm(t * self.matrix)
