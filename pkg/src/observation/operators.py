from abc import ABC, abstractmethod
from typing import Optional, Sequence

import numpy as np

from ..exceptions import DimensionError


class ObservationOperator(ABC):
    """观测算子 H, 作用在状态 (n,) 或集合矩阵 (n, N) 上"""

    @property
    @abstractmethod
    def input_dim(self) -> int:
        pass

    @property
    @abstractmethod
    def output_dim(self) -> int:
        pass

    @property
    @abstractmethod
    def locations(self) -> Optional[np.ndarray]:
        """每个观测对应的格点下标, 局地化时使用"""
        pass

    @abstractmethod
    def __call__(self, x: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def tangent(self, x: np.ndarray, dx: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def adjoint(self, x: np.ndarray, a: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def restrict(self, rows: Sequence[int]) -> "ObservationOperator":
        """只保留部分观测行"""
        pass

    def to_matrix(self) -> np.ndarray:
        return self.tangent(np.zeros(self.input_dim), np.eye(self.input_dim))

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.input_dim:
            raise DimensionError(f"状态维数 {x.shape[0]} 与观测算子输入维数 {self.input_dim} 不一致")
        return x


class IndexSubsetOperator(ObservationOperator):
    """观测状态的部分分量"""

    def __init__(self, n: int, indices: Sequence[int]):
        indices = np.asarray(indices, dtype=int)
        if indices.ndim != 1:
            raise DimensionError("观测下标必须是一维数组")
        if indices.size and (indices.min() < 0 or indices.max() >= n):
            raise DimensionError(f"观测下标超出状态范围 [0, {n})")
        self.n = int(n)
        self.indices = indices

    @property
    def input_dim(self) -> int:
        return self.n

    @property
    def output_dim(self) -> int:
        return self.indices.shape[0]

    @property
    def locations(self) -> np.ndarray:
        return self.indices

    def __call__(self, x):
        return self._check(x)[self.indices]

    def tangent(self, x, dx):
        return self._check(dx)[self.indices]

    def adjoint(self, x, a):
        a = np.asarray(a, dtype=float)
        out = np.zeros((self.n,) + a.shape[1:])
        np.add.at(out, self.indices, a)
        return out

    def restrict(self, rows):
        return IndexSubsetOperator(self.n, self.indices[np.asarray(rows, dtype=int)])

    def __repr__(self) -> str:
        return f"IndexSubsetOperator(n={self.n}, m={self.output_dim})"


class IdentityOperator(IndexSubsetOperator):
    """观测全部分量"""

    def __init__(self, n: int):
        super().__init__(n, np.arange(n))

    def __call__(self, x):
        return self._check(x).copy()

    def tangent(self, x, dx):
        return self._check(dx).copy()

    def adjoint(self, x, a):
        return np.array(a, dtype=float)

    def restrict(self, rows):
        return IndexSubsetOperator(self.n, np.asarray(rows, dtype=int))

    def __repr__(self) -> str:
        return f"IdentityOperator(n={self.n})"


class MatrixOperator(ObservationOperator):
    """显式线性观测矩阵"""

    def __init__(self, matrix: np.ndarray, locations: Optional[Sequence[int]] = None):
        self.matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        if locations is not None:
            locations = np.asarray(locations, dtype=int)
            if locations.shape != (self.matrix.shape[0],):
                raise DimensionError("观测位置数与观测矩阵行数不一致")
        self._locations = locations

    @property
    def input_dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def output_dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def locations(self) -> Optional[np.ndarray]:
        return self._locations

    def __call__(self, x):
        return self.matrix @ self._check(x)

    def tangent(self, x, dx):
        return self.matrix @ self._check(dx)

    def adjoint(self, x, a):
        return self.matrix.T @ np.asarray(a, dtype=float)

    def restrict(self, rows):
        rows = np.asarray(rows, dtype=int)
        locations = None if self._locations is None else self._locations[rows]
        return MatrixOperator(self.matrix[rows], locations)

    def to_matrix(self) -> np.ndarray:
        return self.matrix.copy()

    def __repr__(self) -> str:
        return f"MatrixOperator(shape={self.matrix.shape})"
