from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .ensemble import Ensemble
from .ensrf import WeightAnalysis, _observed, weight_solve
from ..model import DynamicalModel, ModelConfig, as_model
from ..observation import ObservationSet
from ..robust import (
    AdmmState,
    HuberParams,
    Norm,
    ShrinkMode,
    hq_modified_covariance,
    hq_weights,
    huber_norm,
    huber_shrinkage,
    l1_shrinkage,
    modified_observations,
    run_admm,
)


@dataclass
class EnkfConfig:
    """集合分析配置, 字段含义与 Var3dConfig 一致 (laplace_scale 同样只影响代价历史), 另有乘性膨胀因子"""

    norm: Norm = Norm.L2
    huber: HuberParams = field(default_factory=HuberParams)
    outer_iters: int = 15
    mu0: float = 1.0
    rho: float = 1.6
    shrink_mode: ShrinkMode = ShrinkMode.ELEMENTWISE
    l1_weight: float = 1.0
    laplace_scale: float = 2.0
    inflation: float = 1.0
    model: Any = None

    def __post_init__(self):
        self.norm = Norm(self.norm)
        self.shrink_mode = ShrinkMode(self.shrink_mode)
        if self.outer_iters < 1:
            raise ValueError(f"outer_iters 必须至少为 1: {self.outer_iters}")
        if self.mu0 <= 0 or self.rho <= 1:
            raise ValueError("要求 mu0 > 0 且 rho > 1")
        if self.inflation <= 0:
            raise ValueError(f"膨胀因子必须为正: {self.inflation}")
        if self.l1_weight <= 0 or self.laplace_scale <= 0:
            raise ValueError("l1_weight 与 laplace_scale 必须为正")

    @property
    def dynamics(self) -> DynamicalModel:
        return as_model(self.model if self.model is not None else ModelConfig())


def _admm_weights(Y: np.ndarray, obs_mean: np.ndarray, obs: ObservationSet, cfg: EnkfConfig,
                  shrink: Callable, penalty: Callable[[np.ndarray], float]) -> WeightAnalysis:
    n_ens = Y.shape[1]

    def innovation(w):
        return obs.obs_cov.inv_sqrt_apply(obs_mean + Y @ w - obs.values)

    def solve_x(w, st: AdmmState):
        modified = modified_observations(obs, st)
        w_new, _, _ = weight_solve(Y, modified.values - obs_mean, modified.obs_cov)
        return w_new, None

    def objective(w):
        return (n_ens - 1) * float(w @ w) + penalty(innovation(w))

    outcome = run_admm(np.zeros(n_ens), innovation, solve_x, shrink, objective,
                       cfg.outer_iters, cfg.mu0, cfg.rho)
    mu_final = outcome.state.mu
    _, transform, _ = weight_solve(Y, obs.values - obs_mean, obs.obs_cov.scaled(1.0 / mu_final))
    return WeightAnalysis(outcome.x, transform, {
        "mu_final": mu_final,
        "mu_history": outcome.mu_history,
        "residual_history": outcome.residual_history,
        "cost_history": outcome.cost_history,
        "weight_history": outcome.iterates,
    })


def _l1_weights(Y, obs_mean, obs, cfg: EnkfConfig) -> WeightAnalysis:
    def shrink(mu, d, lam):
        return l1_shrinkage(mu, d, lam, cfg.shrink_mode, cfg.l1_weight)

    return _admm_weights(Y, obs_mean, obs, cfg, shrink,
                         lambda d: float(np.sum(np.abs(d))) / cfg.laplace_scale)


def _huber_admm_weights(Y, obs_mean, obs, cfg: EnkfConfig) -> WeightAnalysis:
    def shrink(mu, d, lam):
        return huber_shrinkage(mu, d, lam, cfg.huber, cfg.shrink_mode)

    return _admm_weights(Y, obs_mean, obs, cfg, shrink, lambda d: huber_norm(d, cfg.huber))


def _huber_hq_weights(Y, obs_mean, obs, cfg: EnkfConfig) -> WeightAnalysis:
    n_ens = Y.shape[1]
    w = np.zeros(n_ens)
    u = np.ones(obs.dim)
    transform = np.eye(n_ens)
    history = []
    for _ in range(cfg.outer_iters):
        u = hq_weights(obs.obs_cov.inv_sqrt_apply(obs_mean + Y @ w - obs.values), cfg.huber)
        modified_cov = hq_modified_covariance(obs.obs_cov, u)
        w, transform, _ = weight_solve(Y, obs.values - obs_mean, modified_cov)
        history.append(w.copy())
    return WeightAnalysis(w, transform, {
        "weights": u,
        "variance_inflation": 2.0 / u,
        "weight_history": history,
    })


def _l2_weights(Y, obs_mean, obs, cfg: EnkfConfig) -> WeightAnalysis:
    w, transform, eigvals = weight_solve(Y, obs.values - obs_mean, obs.obs_cov)
    return WeightAnalysis(w, transform, {"eigenvalues": eigvals})


_WEIGHT_SOLVERS = {
    Norm.L2: _l2_weights,
    Norm.L1_ADMM: _l1_weights,
    Norm.HUBER_ADMM: _huber_admm_weights,
    Norm.HUBER_HQ: _huber_hq_weights,
}


def analyze_weights(Y: np.ndarray, obs_mean: np.ndarray, obs: ObservationSet,
                    cfg: EnkfConfig) -> WeightAnalysis:
    """在给定观测偏差 Y 与观测均值上做 cfg.norm 对应的权重分析 (局地分析也用它)"""
    return _WEIGHT_SOLVERS[Norm(cfg.norm)](Y, obs_mean, obs, cfg)


def l1_enkf_analysis(ens: Ensemble, obs: ObservationSet, cfg: EnkfConfig) -> WeightAnalysis:
    """L1-EnKF: ADMM 每步是修正数据 (y', R/mu) 的 EnSRF 权重求解

    最终集合变换取自 ((N-1) I + mu^M Y^T R^{-1} Y)^{-1} 的对称平方根, mu^M 记录在诊断信息中。
    """
    ens = _observed(ens, obs)
    return _l1_weights(ens.obs_deviations, ens.obs_mean, obs, cfg)


def huber_enkf_admm_analysis(ens: Ensemble, obs: ObservationSet, cfg: EnkfConfig) -> WeightAnalysis:
    ens = _observed(ens, obs)
    return _huber_admm_weights(ens.obs_deviations, ens.obs_mean, obs, cfg)


def huber_enkf_analysis(ens: Ensemble, obs: ObservationSet, cfg: EnkfConfig) -> WeightAnalysis:
    """半二次 Huber-EnKF: 交替计算 u 与 R^{-1/2} diag(u/2) R^{-1/2} 加权的 EnSRF 权重"""
    ens = _observed(ens, obs)
    return _huber_hq_weights(ens.obs_deviations, ens.obs_mean, obs, cfg)


def robust_ensemble_analysis(ens: Ensemble, obs: ObservationSet, cfg: EnkfConfig) -> WeightAnalysis:
    ens = _observed(ens, obs)
    return analyze_weights(ens.obs_deviations, ens.obs_mean, obs, cfg)
