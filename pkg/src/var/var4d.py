from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .types import AnalysisResult, Var4dConfig
from ..exceptions import DimensionError
from ..model import StateVector, Trajectory, adjoint, as_model, integrate
from ..model.state import TIME_TOL
from ..observation import CovarianceOp, ObservationSet
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
)


@dataclass(frozen=True)
class StackedInnovation:
    """把各观测时刻的 z_i / lambda_i / d_i 首尾拼接成一个向量"""

    sizes: Tuple[int, ...]

    @classmethod
    def from_observations(cls, obs_seq: Sequence[ObservationSet]) -> "StackedInnovation":
        return cls(tuple(obs.dim for obs in obs_seq))

    @property
    def total(self) -> int:
        return int(sum(self.sizes))

    def stack(self, blocks: Sequence[np.ndarray]) -> np.ndarray:
        if len(blocks) != len(self.sizes):
            raise DimensionError(f"块数 {len(blocks)} 与观测时刻数 {len(self.sizes)} 不一致")
        for block, size in zip(blocks, self.sizes):
            if np.shape(block) != (size,):
                raise DimensionError(f"块长度 {np.shape(block)} 与观测维数 {size} 不一致")
        if not blocks:
            return np.zeros(0)
        return np.concatenate([np.asarray(b, dtype=float) for b in blocks])

    def split(self, vector: np.ndarray) -> List[np.ndarray]:
        vector = np.asarray(vector, dtype=float)
        if vector.shape != (self.total,):
            raise DimensionError(f"拼接向量长度 {vector.shape} 与总观测维数 {self.total} 不一致")
        return np.split(vector, np.cumsum(self.sizes)[:-1]) if self.sizes else []


class FourDVarCost:
    """强约束 4D-Var 代价函数

    前向模式逐段积分到各观测时刻, 梯度由一次反向伴随扫描得到:
    在每个观测时刻累加 H^T R^{-1} (H(x_i) - y_i), 再经伴随模型传回上一时刻。
    """

    def __init__(self, background: StateVector, observations: Sequence[ObservationSet],
                 background_cov: CovarianceOp, model):
        self.background = background
        self.observations = list(observations)
        self.background_cov = background_cov
        self.model = as_model(model)
        times = [obs.time for obs in self.observations]
        if any(t1 <= t0 for t0, t1 in zip(times, times[1:])):
            raise ValueError("4D-Var 观测时刻必须严格递增")
        if times and times[0] < background.time - TIME_TOL:
            raise ValueError(f"观测时刻 {times[0]} 早于窗口起点 {background.time}")

    @property
    def t0(self) -> float:
        return self.background.time

    def forward(self, x0: np.ndarray) -> Tuple[List[Optional[Trajectory]], List[np.ndarray]]:
        """返回每段轨迹 (与前一时刻重合时为 None) 及各观测时刻的状态"""
        segments: List[Optional[Trajectory]] = []
        states: List[np.ndarray] = []
        current = StateVector(x0, self.t0)
        for obs in self.observations:
            if obs.time > current.time + TIME_TOL:
                segment = integrate(current, obs.time, self.model)
                current = segment.final
                segments.append(segment)
            else:
                segments.append(None)
            states.append(current.values)
        return segments, states

    def scaled_innovations(self, x0: np.ndarray) -> List[np.ndarray]:
        _, states = self.forward(x0)
        return [obs.obs_cov.inv_sqrt_apply(obs.residual(x))
                for obs, x in zip(self.observations, states)]

    def background_term(self, x0: np.ndarray) -> float:
        dx = x0 - self.background.values
        return 0.5 * float(dx @ self.background_cov.solve(dx))

    def cost_and_gradient(self, x0: np.ndarray) -> Tuple[float, np.ndarray]:
        x0 = np.asarray(x0, dtype=float)
        dx = x0 - self.background.values
        b_term = self.background_cov.solve(dx)
        cost = 0.5 * float(dx @ b_term)
        segments, states = self.forward(x0)

        a = np.zeros_like(x0)
        for obs, segment, x in zip(reversed(self.observations), reversed(segments), reversed(states)):
            r = obs.residual(x)
            r_term = obs.obs_cov.solve(r)
            cost += 0.5 * float(r @ r_term)
            a = a + obs.operator.adjoint(x, r_term)
            if segment is not None:
                a = adjoint(segment, a, self.model)
        return cost, b_term + a

    def cost(self, x0: np.ndarray) -> float:
        return self.cost_and_gradient(x0)[0]

    def trajectory(self, x0: np.ndarray, t_end: Optional[float] = None) -> Trajectory:
        """从 x0 重新前向积分得到的分析轨迹, 严格满足模型约束"""
        segments, _ = self.forward(x0)
        traj = Trajectory(np.array([self.t0]), np.asarray(x0, dtype=float)[None, :])
        for segment in segments:
            if segment is not None:
                traj = traj.concat(segment)
        if t_end is not None and t_end > traj.times[-1] + TIME_TOL:
            traj = traj.concat(integrate(traj.final, t_end, self.model))
        return traj


def _check_window(x0b: StateVector, obs_seq: Sequence[ObservationSet], cfg: Var4dConfig):
    if cfg.window is None:
        return
    t0, t_end = cfg.window
    if abs(x0b.time - t0) > TIME_TOL:
        raise ValueError(f"背景时刻 {x0b.time} 与窗口起点 {t0} 不一致")
    for obs in obs_seq:
        if obs.time < t0 - TIME_TOL or obs.time > t_end + TIME_TOL:
            raise ValueError(f"观测时刻 {obs.time} 超出同化窗口 {cfg.window}")


def _window_end(cfg: Var4dConfig) -> Optional[float]:
    return None if cfg.window is None else cfg.window[1]


def _solve_cost(cost: FourDVarCost, cfg: Var4dConfig, x_init: np.ndarray) -> OptimizeReport:
    problem = OptimizeProblem(cost.background.dim, cost.cost_and_gradient, x_init)
    return minimize(problem, cfg.tol_grad, cfg.max_iter)


def solve_l2_4dvar(x0b: StateVector, obs_seq: Sequence[ObservationSet], cfg: Var4dConfig,
                   x_init: Optional[np.ndarray] = None) -> AnalysisResult:
    _check_window(x0b, obs_seq, cfg)
    cost = FourDVarCost(x0b, obs_seq, cfg.background_cov, cfg.dynamics)
    report = _solve_cost(cost, cfg, x0b.values if x_init is None else x_init)
    return AnalysisResult(
        analysis=StateVector(report.x_opt, x0b.time),
        norm=Norm.L2,
        cost_history=list(report.cost_history),
        inner_reports=[report],
        iterate_history=[report.x_opt.copy()],
        trajectory=cost.trajectory(report.x_opt, _window_end(cfg)),
    )


def _admm_4dvar(x0b: StateVector, obs_seq: Sequence[ObservationSet], cfg: Var4dConfig,
                norm: Norm, shrink: Callable, penalty: Callable[[np.ndarray], float]) -> AnalysisResult:
    _check_window(x0b, obs_seq, cfg)
    model = cfg.dynamics
    base = FourDVarCost(x0b, obs_seq, cfg.background_cov, model)
    stacked = StackedInnovation.from_observations(obs_seq)

    def innovation(x):
        return stacked.stack(base.scaled_innovations(x))

    def solve_x(x, st: AdmmState):
        blocks = zip(obs_seq, stacked.split(st.z), stacked.split(st.lam))
        modified = [modified_observations(obs, AdmmState(z, lam, st.mu, st.rho)) for obs, z, lam in blocks]
        report = _solve_cost(FourDVarCost(x0b, modified, cfg.background_cov, model), cfg, x)
        return report.x_opt, report

    def objective(x):
        return base.background_term(x) + penalty(innovation(x))

    outcome = run_admm(x0b.values, innovation, solve_x, shrink, objective,
                       cfg.outer_iters, cfg.mu0, cfg.rho)
    return AnalysisResult(
        analysis=StateVector(outcome.x, x0b.time),
        norm=norm,
        cost_history=outcome.cost_history,
        constraint_residual_history=outcome.residual_history,
        inner_reports=outcome.reports,
        iterate_history=outcome.iterates,
        diagnostics={
            "mu_history": outcome.mu_history,
            "mu_final": outcome.state.mu,
            "z": stacked.split(outcome.state.z),
            "lambda": stacked.split(outcome.state.lam),
        },
        trajectory=base.trajectory(outcome.x, _window_end(cfg)),
    )


def solve_l1_4dvar(x0b: StateVector, obs_seq: Sequence[ObservationSet], cfg: Var4dConfig) -> AnalysisResult:
    """L1-4D-Var: 在拼接的缩放新息上做收缩, 模型约束由前向积分严格满足"""

    def shrink(mu, d, lam):
        return l1_shrinkage(mu, d, lam, cfg.shrink_mode, cfg.l1_weight)

    return _admm_4dvar(x0b, obs_seq, cfg, Norm.L1_ADMM, shrink,
                       lambda d: float(np.sum(np.abs(d))) / cfg.laplace_scale)


def solve_huber_4dvar_admm(x0b: StateVector, obs_seq: Sequence[ObservationSet],
                           cfg: Var4dConfig) -> AnalysisResult:
    def shrink(mu, d, lam):
        return huber_shrinkage(mu, d, lam, cfg.huber, cfg.shrink_mode)

    return _admm_4dvar(x0b, obs_seq, cfg, Norm.HUBER_ADMM, shrink,
                       lambda d: huber_norm(d, cfg.huber))


def solve_huber_4dvar_hq(x0b: StateVector, obs_seq: Sequence[ObservationSet],
                         cfg: Var4dConfig) -> AnalysisResult:
    """半二次 Huber-4D-Var: 每个观测时刻各自更新权重与协方差, 再求解完整的 L2-4D-Var"""
    _check_window(x0b, obs_seq, cfg)
    model = cfg.dynamics
    base = FourDVarCost(x0b, obs_seq, cfg.background_cov, model)
    result = AnalysisResult(analysis=x0b, norm=Norm.HUBER_HQ)
    x = x0b.values.copy()
    weights = [np.ones(obs.dim) for obs in obs_seq]

    for _ in range(cfg.outer_iters):
        weights = [hq_weights(z, cfg.huber) for z in base.scaled_innovations(x)]
        modified = [obs.with_data(obs_cov=hq_modified_covariance(obs.obs_cov, u))
                    for obs, u in zip(obs_seq, weights)]
        report = _solve_cost(FourDVarCost(x0b, modified, cfg.background_cov, model), cfg, x)
        x = report.x_opt
        result.inner_reports.append(report)
        result.iterate_history.append(x.copy())
        penalty = sum(huber_norm(z, cfg.huber) for z in base.scaled_innovations(x))
        result.cost_history.append(base.background_term(x) + penalty)

    result.analysis = StateVector(x, x0b.time)
    result.trajectory = base.trajectory(x, _window_end(cfg))
    result.diagnostics = {
        "weights": weights,
        "variance_inflation": [2.0 / u for u in weights],
        "final_weights": [hq_weights(z, cfg.huber) for z in base.scaled_innovations(x)],
    }
    return result


_SOLVERS = {
    Norm.L2: solve_l2_4dvar,
    Norm.L1_ADMM: solve_l1_4dvar,
    Norm.HUBER_ADMM: solve_huber_4dvar_admm,
    Norm.HUBER_HQ: solve_huber_4dvar_hq,
}


def solve_4dvar(x0b: StateVector, obs_seq: Sequence[ObservationSet], cfg: Var4dConfig) -> AnalysisResult:
    """按 cfg.norm 选择 4D-Var 形式"""
    return _SOLVERS[Norm(cfg.norm)](x0b, obs_seq, cfg)
