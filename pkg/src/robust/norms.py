from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..model.state import StateVector
from ..observation import CovarianceOp, DenseCovariance, DiagonalCovariance, ObservationSet

ScaledInnovation = np.ndarray


class HuberParams(BaseModel):
    """Huber 范数参数: 超过 tau 个标准差后改为线性惩罚"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    tau: float = Field(1.0, gt=0)


def scaled_innovation(x: Union[StateVector, np.ndarray], obs: ObservationSet) -> ScaledInnovation:
    """z = R^{-1/2} (H(x) - y)"""
    values = x.values if isinstance(x, StateVector) else x
    return obs.obs_cov.inv_sqrt_apply(obs.residual(values))


def huber_elementwise(z: np.ndarray, p: HuberParams) -> np.ndarray:
    """逐分量 Huber 函数; 在 |a| = tau 处取线性分支, 使其下半连续"""
    a = np.abs(np.asarray(z, dtype=float))
    return np.where(a >= p.tau, a - 0.5, 0.5 * a * a)


def huber_norm(z: ScaledInnovation, p: HuberParams) -> float:
    return float(np.sum(huber_elementwise(z, p)))


def hq_weights(z: ScaledInnovation, p: HuberParams) -> np.ndarray:
    """半二次权重 u = sigma(z): |z| <= tau 时为 1, 否则 tau/|z|"""
    a = np.abs(np.asarray(z, dtype=float))
    u = np.ones_like(a)
    outside = a > p.tau
    u[outside] = p.tau / a[outside]
    return u


def hq_surrogate(z: ScaledInnovation, u: np.ndarray, p: HuberParams) -> float:
    """乘性半二次增广目标 sum(u z^2 / 2 + tau^2 (1/u - 1) / 2), 对 u 的最小点为 hq_weights(z)"""
    z = np.asarray(z, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise ValueError("半二次权重必须为正")
    return float(np.sum(0.5 * u * z * z + 0.5 * p.tau ** 2 * (1.0 / u - 1.0)))


def hq_modified_covariance(R: CovarianceOp, u: np.ndarray) -> CovarianceOp:
    """R' = R^{1/2} diag(2/u) R^{1/2}"""
    u = np.asarray(u, dtype=float)
    if u.shape != (R.dim,):
        raise ValueError(f"权重长度 {u.shape} 与协方差维数 {R.dim} 不一致")
    if np.any(u <= 0) or not np.all(np.isfinite(u)):
        raise ValueError("半二次权重必须为有限正数")
    if isinstance(R, DiagonalCovariance):
        return R.reweighted(2.0 / u)
    if isinstance(R, DenseCovariance):
        root = R.sqrt_matrix()
        return DenseCovariance(root @ np.diag(2.0 / u) @ root)
    root = R.sqrt_apply(np.eye(R.dim))
    return DenseCovariance(root @ np.diag(2.0 / u) @ root.T)


def laplace_loglik(z: Union[float, np.ndarray], lambda_l: float) -> Union[float, np.ndarray]:
    """单变量拉普拉斯分布的对数似然 -log(2 lambda) - |z| / lambda"""
    if lambda_l <= 0:
        raise ValueError(f"拉普拉斯尺度必须为正: {lambda_l}")
    return -np.log(2.0 * lambda_l) - np.abs(z) / lambda_l


def laplace_sample(lambda_l: float, size: int, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """抽取拉普拉斯样本, 方差为 2 lambda^2"""
    if lambda_l <= 0:
        raise ValueError(f"拉普拉斯尺度必须为正: {lambda_l}")
    rng = rng or np.random.default_rng()
    return rng.laplace(0.0, lambda_l, size)
