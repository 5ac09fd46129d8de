from dataclasses import dataclass, field
from typing import Any, Dict, Tuple

import numpy as np
from scipy import linalg

from .ensemble import Ensemble
from ..exceptions import CovarianceError
from ..observation import CovarianceOp, ObservationSet


@dataclass
class WeightAnalysis:
    """集合空间中的分析: 均值权重 w_mean 与对称平方根变换 W"""

    mean_weights: np.ndarray
    transform: np.ndarray
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def member_weights(self) -> np.ndarray:
        return self.mean_weights[:, None] + self.transform

    def apply(self, ens: Ensemble) -> Ensemble:
        return ens.from_weights(self.mean_weights, self.transform)


def weight_solve(obs_deviations: np.ndarray, innovation: np.ndarray, obs_cov: CovarianceOp
                 ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """S = ((N-1) I + Y^T R^{-1} Y)^{-1}; w = S Y^T R^{-1} innovation; S = W W^T / (N-1)

    返回 (w, W, 特征值)。
    """
    n_ens = obs_deviations.shape[1]
    rinv_y = obs_cov.solve(obs_deviations)
    core = (n_ens - 1) * np.eye(n_ens) + obs_deviations.T @ rinv_y
    core = 0.5 * (core + core.T)
    eigvals, eigvecs = linalg.eigh(core)
    if eigvals[0] <= 0:
        raise CovarianceError(f"集合空间矩阵不是正定的 (最小特征值 {eigvals[0]:.3e})")
    mean_weights = eigvecs @ ((eigvecs.T @ (rinv_y.T @ innovation)) / eigvals)
    transform = (eigvecs * eigvals ** -0.5) @ eigvecs.T * np.sqrt(n_ens - 1)
    return mean_weights, transform, eigvals


def _observed(ens: Ensemble, obs: ObservationSet) -> Ensemble:
    return ens if ens.operator is not None else ens.observed(obs.operator)


def ensrf_analysis(ens: Ensemble, obs: ObservationSet) -> WeightAnalysis:
    """集合平方根滤波 (对称平方根) 的权重分析"""
    ens = _observed(ens, obs)
    innovation = obs.values - ens.obs_mean
    mean_weights, transform, eigvals = weight_solve(ens.obs_deviations, innovation, obs.obs_cov)
    return WeightAnalysis(mean_weights, transform, {"eigenvalues": eigvals})


def ensrf_weight_cost(w: np.ndarray, ens: Ensemble, obs: ObservationSet) -> Tuple[float, np.ndarray]:
    """J(w) = (N-1)|w|^2 + |H(mean + X w) - y|^2_{R^-1}

    梯度经 Y 线性化 (高斯-牛顿), 对线性 H 精确。
    """
    ens = _observed(ens, obs)
    w = np.asarray(w, dtype=float)
    x = ens.mean + ens.deviations @ w
    r = obs.residual(x)
    r_term = obs.obs_cov.solve(r)
    cost = (ens.n_ens - 1) * float(w @ w) + float(r @ r_term)
    grad = 2.0 * (ens.n_ens - 1) * w + 2.0 * ens.obs_deviations.T @ r_term
    return cost, grad
