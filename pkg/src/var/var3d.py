from typing import Callable, List, Optional, Sequence

import numpy as np

from .types import AnalysisResult, Var3dConfig
from ..model import StateVector, forecast
from ..model.state import TIME_TOL
from ..observation import ObservationSet
from ..optim import OptimizeProblem, OptimizeReport, minimize
from ..robust import (
    AdmmState,
    Norm,
    hq_modified_covariance,
    hq_weights,
    huber_norm,
    huber_shrinkage,
    l1_shrinkage,
    modified_observations,
    run_admm,
    scaled_innovation,
)


def _check_time(xb: StateVector, obs: ObservationSet):
    if abs(obs.time - xb.time) > TIME_TOL * max(1.0, abs(xb.time)):
        raise ValueError(f"观测时刻 {obs.time} 与分析时刻 {xb.time} 不一致")


def l2_cost(xb: StateVector, obs: ObservationSet, cfg: Var3dConfig):
    """1/2 |x - xb|^2_{B^-1} + 1/2 |H(x) - y|^2_{R^-1} 及其梯度"""
    B = cfg.background_cov

    def cost_and_gradient(x: np.ndarray):
        dx = x - xb.values
        b_term = B.solve(dx)
        r = obs.residual(x)
        r_term = obs.obs_cov.solve(r)
        cost = 0.5 * float(dx @ b_term) + 0.5 * float(r @ r_term)
        return cost, b_term + obs.operator.adjoint(x, r_term)

    return cost_and_gradient


def _solve_l2(xb: StateVector, obs: ObservationSet, cfg: Var3dConfig,
              x_init: Optional[np.ndarray]) -> OptimizeReport:
    x0 = xb.values if x_init is None else x_init
    problem = OptimizeProblem(xb.dim, l2_cost(xb, obs, cfg), x0)
    return minimize(problem, cfg.tol_grad, cfg.max_iter)


def _background_term(xb: StateVector, cfg: Var3dConfig, x: np.ndarray) -> float:
    dx = x - xb.values
    return 0.5 * float(dx @ cfg.background_cov.solve(dx))


def solve_l2_3dvar(xb: StateVector, obs: ObservationSet, cfg: Var3dConfig,
                   x_init: Optional[np.ndarray] = None) -> AnalysisResult:
    _check_time(xb, obs)
    report = _solve_l2(xb, obs, cfg, x_init)
    return AnalysisResult(
        analysis=StateVector(report.x_opt, xb.time),
        norm=Norm.L2,
        cost_history=list(report.cost_history),
        inner_reports=[report],
        iterate_history=[report.x_opt.copy()],
    )


def _admm_3dvar(xb: StateVector, obs: ObservationSet, cfg: Var3dConfig, norm: Norm,
                shrink: Callable, objective: Callable) -> AnalysisResult:
    _check_time(xb, obs)

    def solve_x(x: np.ndarray, st: AdmmState):
        report = _solve_l2(xb, modified_observations(obs, st), cfg, x)
        return report.x_opt, report

    outcome = run_admm(
        xb.values,
        lambda x: scaled_innovation(x, obs),
        solve_x,
        shrink,
        objective,
        cfg.outer_iters,
        cfg.mu0,
        cfg.rho,
    )
    return AnalysisResult(
        analysis=StateVector(outcome.x, xb.time),
        norm=norm,
        cost_history=outcome.cost_history,
        constraint_residual_history=outcome.residual_history,
        inner_reports=outcome.reports,
        iterate_history=outcome.iterates,
        diagnostics={
            "mu_history": outcome.mu_history,
            "mu_final": outcome.state.mu,
            "z": outcome.state.z.copy(),
            "lambda": outcome.state.lam.copy(),
        },
    )


def solve_l1_3dvar(xb: StateVector, obs: ObservationSet, cfg: Var3dConfig) -> AnalysisResult:
    """L1-3D-Var: ADMM 外循环, 每步为修正数据的 L2-3D-Var"""

    def shrink(mu, d, lam):
        return l1_shrinkage(mu, d, lam, cfg.shrink_mode, cfg.l1_weight)

    def objective(x):
        d = scaled_innovation(x, obs)
        return _background_term(xb, cfg, x) + float(np.sum(np.abs(d))) / cfg.laplace_scale

    return _admm_3dvar(xb, obs, cfg, Norm.L1_ADMM, shrink, objective)


def solve_huber_3dvar_admm(xb: StateVector, obs: ObservationSet, cfg: Var3dConfig) -> AnalysisResult:
    def shrink(mu, d, lam):
        return huber_shrinkage(mu, d, lam, cfg.huber, cfg.shrink_mode)

    def objective(x):
        return _background_term(xb, cfg, x) + huber_norm(scaled_innovation(x, obs), cfg.huber)

    return _admm_3dvar(xb, obs, cfg, Norm.HUBER_ADMM, shrink, objective)


def solve_huber_3dvar_hq(xb: StateVector, obs: ObservationSet, cfg: Var3dConfig) -> AnalysisResult:
    """半二次 Huber-3D-Var: 交替更新权重 u 与以 R' = 2R/u 求解的 L2-3D-Var"""
    _check_time(xb, obs)
    x = xb.values.copy()
    result = AnalysisResult(analysis=xb, norm=Norm.HUBER_HQ)
    weights = np.ones(obs.dim)
    modified = obs

    for _ in range(cfg.outer_iters):
        weights = hq_weights(scaled_innovation(x, obs), cfg.huber)
        modified = obs.with_data(obs_cov=hq_modified_covariance(obs.obs_cov, weights))
        report = _solve_l2(xb, modified, cfg, x)
        x = report.x_opt
        result.inner_reports.append(report)
        result.iterate_history.append(x.copy())
        result.cost_history.append(
            _background_term(xb, cfg, x) + huber_norm(scaled_innovation(x, obs), cfg.huber)
        )

    result.analysis = StateVector(x, xb.time)
    result.diagnostics = {
        "weights": weights,
        "variance_inflation": 2.0 / weights,
        "modified_obs_cov": modified.obs_cov,
        "final_weights": hq_weights(scaled_innovation(x, obs), cfg.huber),
    }
    return result


_SOLVERS = {
    Norm.L2: solve_l2_3dvar,
    Norm.L1_ADMM: solve_l1_3dvar,
    Norm.HUBER_ADMM: solve_huber_3dvar_admm,
    Norm.HUBER_HQ: solve_huber_3dvar_hq,
}


def solve_3dvar(xb: StateVector, obs: ObservationSet, cfg: Var3dConfig) -> AnalysisResult:
    """按 cfg.norm 选择 3D-Var 形式"""
    return _SOLVERS[Norm(cfg.norm)](xb, obs, cfg)


def cycle_3dvar(x0b: StateVector, obs_seq: Sequence[ObservationSet], cfg: Var3dConfig,
                callback: Optional[Callable[[int, AnalysisResult], None]] = None
                ) -> List[AnalysisResult]:
    """循环 3D-Var: 由上一次分析预报到观测时刻, 再做一次分析"""
    times = [obs.time for obs in obs_seq]
    if any(t1 <= t0 for t0, t1 in zip(times, times[1:])):
        raise ValueError("观测时刻必须严格递增")
    if times and times[0] < x0b.time - TIME_TOL:
        raise ValueError(f"首个观测时刻 {times[0]} 早于背景时刻 {x0b.time}")

    model = cfg.dynamics
    results: List[AnalysisResult] = []
    state = x0b
    for i, obs in enumerate(obs_seq):
        if obs.time > state.time + TIME_TOL:
            background = forecast(state, obs.time, model)
        else:
            background = state.at_time(obs.time)
        result = solve_3dvar(background, obs, cfg)
        result.diagnostics["background"] = background
        results.append(result)
        if callback is not None:
            callback(i, result)
        state = result.analysis
    return results
