from abc import ABC, abstractmethod
from typing import Sequence

import numpy as np
from scipy import linalg

from ..exceptions import CovarianceError, DimensionError


def _columnwise(diag: np.ndarray, v: np.ndarray) -> np.ndarray:
    """对角缩放, 对 (m,) 与 (m, N) 两种输入都沿第 0 轴作用"""
    return diag[:, None] * v if v.ndim == 2 else diag * v


class CovarianceOp(ABC):
    """对称正定协方差算子: 乘法、求逆、平方根及逆平方根"""

    @property
    @abstractmethod
    def dim(self) -> int:
        pass

    @abstractmethod
    def apply(self, v: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def solve(self, v: np.ndarray) -> np.ndarray:
        """C^{-1} v"""
        pass

    @abstractmethod
    def sqrt_apply(self, v: np.ndarray) -> np.ndarray:
        """C^{1/2} v (对称平方根)"""
        pass

    @abstractmethod
    def inv_sqrt_apply(self, v: np.ndarray) -> np.ndarray:
        """C^{-1/2} v"""
        pass

    @abstractmethod
    def scaled(self, factor: float) -> "CovarianceOp":
        """返回 factor * C"""
        pass

    @abstractmethod
    def subset(self, rows: Sequence[int]) -> "CovarianceOp":
        """取出给定分量对应的子矩阵"""
        pass

    @abstractmethod
    def to_dense(self) -> np.ndarray:
        pass

    def _check(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.dim:
            raise DimensionError(f"向量维数 {v.shape[0]} 与协方差维数 {self.dim} 不一致")
        return v


class DiagonalCovariance(CovarianceOp):
    """对角协方差, 按方差向量存储"""

    def __init__(self, variances: np.ndarray):
        variances = np.atleast_1d(np.asarray(variances, dtype=float))
        if variances.ndim != 1:
            raise DimensionError("对角协方差需要一维方差向量")
        if not np.all(np.isfinite(variances)) or np.any(variances <= 0):
            raise CovarianceError("对角协方差的方差必须为有限正数")
        self.variances = variances
        self._std = np.sqrt(variances)

    @classmethod
    def from_std(cls, std: float, dim: int) -> "DiagonalCovariance":
        return cls(np.full(dim, float(std) ** 2))

    @property
    def dim(self) -> int:
        return self.variances.shape[0]

    @property
    def std(self) -> np.ndarray:
        return self._std

    def apply(self, v):
        return _columnwise(self.variances, self._check(v))

    def solve(self, v):
        return _columnwise(1.0 / self.variances, self._check(v))

    def sqrt_apply(self, v):
        return _columnwise(self._std, self._check(v))

    def inv_sqrt_apply(self, v):
        return _columnwise(1.0 / self._std, self._check(v))

    def scaled(self, factor: float) -> "DiagonalCovariance":
        return DiagonalCovariance(self.variances * factor)

    def reweighted(self, factors: np.ndarray) -> "DiagonalCovariance":
        """逐分量缩放方差"""
        return DiagonalCovariance(self.variances * np.asarray(factors, dtype=float))

    def subset(self, rows):
        return DiagonalCovariance(self.variances[np.asarray(rows, dtype=int)])

    def to_dense(self) -> np.ndarray:
        return np.diag(self.variances)

    def __repr__(self) -> str:
        return f"DiagonalCovariance(dim={self.dim})"


class DenseCovariance(CovarianceOp):
    """稠密对称正定协方差, 通过特征分解得到对称平方根"""

    def __init__(self, matrix: np.ndarray, sym_tol: float = 1e-10):
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        if matrix.shape[0] != matrix.shape[1]:
            raise DimensionError(f"协方差矩阵必须是方阵, 实际形状 {matrix.shape}")
        scale = max(1.0, float(np.max(np.abs(matrix))))
        if np.max(np.abs(matrix - matrix.T)) > sym_tol * scale:
            raise CovarianceError("协方差矩阵不对称")
        matrix = 0.5 * (matrix + matrix.T)
        eigvals, eigvecs = linalg.eigh(matrix)
        if eigvals[0] <= 0:
            raise CovarianceError(f"协方差矩阵不是正定的 (最小特征值 {eigvals[0]:.3e})")
        self.matrix = matrix
        self._eigvals = eigvals
        self._eigvecs = eigvecs

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def _spectral(self, v: np.ndarray, power: float) -> np.ndarray:
        coeffs = self._eigvecs.T @ self._check(v)
        return self._eigvecs @ _columnwise(self._eigvals ** power, coeffs)

    def apply(self, v):
        return self.matrix @ self._check(v)

    def solve(self, v):
        return self._spectral(v, -1.0)

    def sqrt_apply(self, v):
        return self._spectral(v, 0.5)

    def inv_sqrt_apply(self, v):
        return self._spectral(v, -0.5)

    def sqrt_matrix(self) -> np.ndarray:
        return (self._eigvecs * np.sqrt(self._eigvals)) @ self._eigvecs.T

    def scaled(self, factor: float) -> "DenseCovariance":
        return DenseCovariance(self.matrix * factor)

    def subset(self, rows):
        idx = np.asarray(rows, dtype=int)
        return DenseCovariance(self.matrix[np.ix_(idx, idx)])

    def to_dense(self) -> np.ndarray:
        return self.matrix.copy()

    def __repr__(self) -> str:
        return f"DenseCovariance(dim={self.dim})"
