from typing import Union

import numpy as np

from .base import DynamicalModel
from .state import ModelConfig, StateVector
from ..exceptions import DimensionError


def _l96(x: np.ndarray, forcing: float) -> np.ndarray:
    return (np.roll(x, -1, axis=0) - np.roll(x, 2, axis=0)) * np.roll(x, 1, axis=0) - x + forcing


def _l96_tangent(x: np.ndarray, dx: np.ndarray) -> np.ndarray:
    return (np.roll(x, -1, axis=0) - np.roll(x, 2, axis=0)) * np.roll(dx, 1, axis=0) + \
        (np.roll(dx, -1, axis=0) - np.roll(dx, 2, axis=0)) * np.roll(x, 1, axis=0) - dx


def _l96_adjoint(x: np.ndarray, a: np.ndarray) -> np.ndarray:
    return np.roll(x, 2, axis=0) * np.roll(a, 1, axis=0) + \
        (np.roll(x, -2, axis=0) - np.roll(x, 1, axis=0)) * np.roll(a, -1, axis=0) - \
        np.roll(x, -1, axis=0) * np.roll(a, -2, axis=0) - a


def lorenz96_rhs(x: Union[StateVector, np.ndarray], cfg: ModelConfig) -> np.ndarray:
    """dx_k/dt = x_{k-1}(x_{k+1} - x_{k-2}) - x_k + F, 下标循环"""
    values = x.values if isinstance(x, StateVector) else np.asarray(x, dtype=float)
    if values.shape[0] != cfg.n:
        raise DimensionError(f"状态维数 {values.shape[0]} 与配置 n={cfg.n} 不一致")
    return _l96(values, cfg.forcing)


class Lorenz96Model(DynamicalModel):
    """Lorenz-96 模型及其切线性/伴随右端项"""

    def __init__(self, cfg: ModelConfig = None):
        self.cfg = cfg or ModelConfig()

    @property
    def dim(self) -> int:
        return self.cfg.n

    @property
    def dt(self) -> float:
        return self.cfg.dt

    @property
    def forcing(self) -> float:
        return self.cfg.forcing

    def rhs(self, x: np.ndarray) -> np.ndarray:
        return _l96(x, self.cfg.forcing)

    def jvp(self, x: np.ndarray, dx: np.ndarray) -> np.ndarray:
        return _l96_tangent(x, dx)

    def vjp(self, x: np.ndarray, a: np.ndarray) -> np.ndarray:
        return _l96_adjoint(x, a)

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        x = self.check_dim(x)
        n = self.dim
        jac = np.zeros((n, n))
        for k in range(n):
            jac[k, (k - 1) % n] += x[(k + 1) % n] - x[(k - 2) % n]
            jac[k, (k + 1) % n] += x[(k - 1) % n]
            jac[k, (k - 2) % n] -= x[(k - 1) % n]
            jac[k, k] -= 1.0
        return jac

    def with_dt(self, dt: float) -> "Lorenz96Model":
        return Lorenz96Model(self.cfg.model_copy(update={"dt": dt}))

    def fixed_point(self) -> np.ndarray:
        """平凡不动点 (F, ..., F)"""
        return np.full(self.dim, self.cfg.forcing)

    def __repr__(self) -> str:
        return f"Lorenz96Model(n={self.cfg.n}, F={self.cfg.forcing}, dt={self.cfg.dt})"
