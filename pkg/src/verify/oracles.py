import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from scipy import optimize

from ..audit import AuditLogger
from ..ensemble import Ensemble, ensrf_analysis
from ..experiments import make_reference
from ..model import (
    DynamicalModel,
    LinearModel,
    Lorenz96Model,
    ModelConfig,
    StateVector,
    adjoint,
    observed_order,
    propagate_ensemble,
    tangent_linear,
)
from ..observation import (
    DenseCovariance,
    DiagonalCovariance,
    IdentityOperator,
    MatrixOperator,
    ObservationSet,
)
from ..robust import HuberParams, ShrinkMode, huber_elementwise, huber_shrinkage, l1_shrinkage
from ..var import FourDVarCost, Var3dConfig, solve_l2_3dvar

ADJOINT_TOL = 1e-10
GRADIENT_TOL = 1e-5
PROX_GAP_TOL = 1e-9
KF_3DVAR_TOL = 1e-8
KF_ENSRF_TOL = 1e-6
ORDER_RANGE = (3.7, 4.3)


@dataclass
class CheckResult:
    """单项校验结果: value 与 threshold 比较得到 passed"""

    name: str
    passed: bool
    value: float
    threshold: float
    details: Dict[str, Any] = field(default_factory=dict)
    elapsed: float = 0.0


class CorruptedAdjointModel(DynamicalModel):
    """伴随被扰动的模型包装, 供校验的负面测试使用"""

    def __init__(self, inner: DynamicalModel, scale: float = 1.01):
        self.inner = inner
        self.scale = scale

    @property
    def dim(self) -> int:
        return self.inner.dim

    @property
    def dt(self) -> float:
        return self.inner.dt

    def rhs(self, x):
        return self.inner.rhs(x)

    def jvp(self, x, dx):
        return self.inner.jvp(x, dx)

    def vjp(self, x, a):
        return self.scale * self.inner.vjp(x, a)

    def jacobian(self, x):
        return self.inner.jacobian(x)

    def with_dt(self, dt: float) -> "CorruptedAdjointModel":
        return CorruptedAdjointModel(self.inner.with_dt(dt), self.scale)


def _window_trajectory(model: DynamicalModel, window: float):
    return make_reference(ModelConfig(n=model.dim, dt=model.dt), window)


def check_adjoint_identity(corrupt: bool = False, n_pairs: int = 100, window: float = 0.6,
                           seed: int = 0) -> CheckResult:
    """<M u, v> 与 <u, M^T v> 的相对差, 取所有随机对中的最大值"""
    model: DynamicalModel = Lorenz96Model()
    traj = _window_trajectory(model, window)
    if corrupt:
        model = CorruptedAdjointModel(model)

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_pairs):
        u = rng.standard_normal(traj.dim)
        v = rng.standard_normal(traj.dim)
        lhs = float(tangent_linear(traj, u, model) @ v)
        rhs = float(u @ adjoint(traj, v, model))
        worst = max(worst, abs(lhs - rhs) / (np.linalg.norm(u) * np.linalg.norm(v)))
    return CheckResult("adjoint_identity", worst <= ADJOINT_TOL, worst, ADJOINT_TOL,
                       {"pairs": n_pairs, "window": window, "corrupted": corrupt})


def check_gradient(corrupt: bool = False, n_directions: int = 20, window: float = 0.6,
                   eps: float = 1e-5, seed: int = 1) -> CheckResult:
    """4D-Var 伴随梯度与中心差分的方向导数比较"""
    model: DynamicalModel = Lorenz96Model()
    traj = _window_trajectory(model, window)
    if corrupt:
        model = CorruptedAdjointModel(model)

    rng = np.random.default_rng(seed)
    n = traj.dim
    obs_cov = DiagonalCovariance.from_std(0.2, n)
    operator = IdentityOperator(n)
    obs_seq = [
        ObservationSet(t, traj.at(t).values + 0.2 * rng.standard_normal(n), obs_cov, operator)
        for t in np.arange(1, int(round(window / 0.1)) + 1) * 0.1
    ]
    background = StateVector(traj.initial.values + 0.3 * rng.standard_normal(n), traj.times[0])
    cost = FourDVarCost(background, obs_seq, DiagonalCovariance.from_std(0.3, n), model)

    x = background.values + 0.1 * rng.standard_normal(n)
    _, grad = cost.cost_and_gradient(x)
    worst = 0.0
    for _ in range(n_directions):
        direction = rng.standard_normal(n)
        direction /= np.linalg.norm(direction)
        fd = (cost.cost(x + eps * direction) - cost.cost(x - eps * direction)) / (2 * eps)
        worst = max(worst, abs(fd - grad @ direction) / np.linalg.norm(grad))
    return CheckResult("adjoint_gradient", worst <= GRADIENT_TOL, worst, GRADIENT_TOL,
                       {"directions": n_directions, "eps": eps, "corrupted": corrupt})


def _piecewise_min(phi: Callable[[float], float], breakpoints: List[float], radius: float) -> float:
    """在各凸分段上做有界一维搜索, 并计入分段端点"""
    edges = [-radius] + [b for b in sorted(breakpoints) if -radius < b < radius] + [radius]
    best = min(phi(e) for e in edges)
    for a, b in zip(edges, edges[1:]):
        res = optimize.minimize_scalar(phi, bounds=(a, b), method="bounded",
                                       options={"xatol": 1e-12, "maxiter": 500})
        best = min(best, float(res.fun))
    return best


def check_prox(n_instances: int = 1000, seed: int = 2) -> CheckResult:
    """逐分量 L1 / Huber 收缩与一维数值最小化的目标值差"""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        mu = float(10 ** rng.uniform(-1, 2))
        tau = float(rng.choice([1.0, 2.0, 3.0]))
        d = rng.normal(scale=3.0, size=1)
        lam = rng.uniform(-1.0, 1.0, size=1)
        v = float(d[0] - lam[0] / mu)
        radius = abs(v) + tau + 2.0
        params = HuberParams(tau=tau)

        def phi_l1(z):
            return abs(z) + 0.5 * mu * (z - v) ** 2

        def phi_hub(z):
            return float(huber_elementwise(np.array([z]), params)[0]) + 0.5 * mu * (z - v) ** 2

        z_l1 = float(l1_shrinkage(mu, d, lam, ShrinkMode.ELEMENTWISE)[0])
        z_hub = float(huber_shrinkage(mu, d, lam, params, ShrinkMode.ELEMENTWISE)[0])
        worst = max(worst,
                    phi_l1(z_l1) - _piecewise_min(phi_l1, [0.0], radius),
                    phi_hub(z_hub) - _piecewise_min(phi_hub, [-tau, tau], radius))
    return CheckResult("prox_oracle", worst <= PROX_GAP_TOL, worst, PROX_GAP_TOL,
                       {"instances": n_instances})


def _random_spd(rng: np.random.Generator, n: int) -> np.ndarray:
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return (q * rng.uniform(0.5, 2.0, n)) @ q.T


def check_3dvar_kalman(n_cases: int = 10, seed: int = 3) -> CheckResult:
    """L2 3D-Var 分析与卡尔曼更新闭式解的最大差"""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_cases):
        n = int(rng.integers(2, 6))
        m = int(rng.integers(1, n + 1))
        B = _random_spd(rng, n)
        H = rng.standard_normal((m, n))
        r_var = rng.uniform(0.5, 2.0, m)
        xb = rng.standard_normal(n)
        # 新息取小量, 使代价函数的舍入误差远低于比较容差
        y = H @ xb + 0.01 * rng.standard_normal(m)

        obs = ObservationSet(0.0, y, DiagonalCovariance(r_var), MatrixOperator(H))
        cfg = Var3dConfig(background_cov=DenseCovariance(B), tol_grad=1e-11, max_iter=500)
        xa = solve_l2_3dvar(StateVector(xb, 0.0), obs, cfg).analysis.values

        gain = B @ H.T @ np.linalg.inv(H @ B @ H.T + np.diag(r_var))
        x_kf = xb + gain @ (y - H @ xb)
        worst = max(worst, float(np.max(np.abs(xa - x_kf))) / max(1.0, float(np.max(np.abs(x_kf)))))
    return CheckResult("3dvar_kalman", worst <= KF_3DVAR_TOL, worst, KF_3DVAR_TOL,
                       {"cases": n_cases})


def check_ensrf_kalman(n_cases: int = 5, seed: int = 4) -> CheckResult:
    """线性模型一步预报加 EnSRF 分析, 与基于样本协方差的卡尔曼滤波比较均值和协方差"""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_cases):
        n, n_ens, m = 3, 8, 2
        model = LinearModel(0.5 * rng.standard_normal((n, n)), dt=0.05)
        members = rng.standard_normal((n, 1)) + rng.standard_normal((n, n_ens))
        forecast = Ensemble(propagate_ensemble(members, 0.0, 0.05, model), 0.05)

        M = model.step_matrix(0.05)
        P0 = Ensemble(members, 0.0).covariance()
        mean_f = M @ members.mean(axis=1)
        P_f = M @ P0 @ M.T

        H = rng.standard_normal((m, n))
        r_var = rng.uniform(0.5, 2.0, m)
        y = H @ mean_f + rng.standard_normal(m)
        obs = ObservationSet(0.05, y, DiagonalCovariance(r_var), MatrixOperator(H))

        analysis = ensrf_analysis(forecast, obs).apply(forecast)
        gain = P_f @ H.T @ np.linalg.inv(H @ P_f @ H.T + np.diag(r_var))
        mean_kf = mean_f + gain @ (y - H @ mean_f)
        cov_kf = (np.eye(n) - gain @ H) @ P_f

        worst = max(worst,
                    float(np.max(np.abs(analysis.mean - mean_kf))),
                    float(np.max(np.abs(analysis.covariance() - cov_kf))))
    return CheckResult("ensrf_kalman", worst <= KF_ENSRF_TOL, worst, KF_ENSRF_TOL,
                       {"cases": n_cases})


def check_rk4_order(dt: float = 0.1) -> CheckResult:
    """线性衰减系统上的 RK4 经验收敛阶"""
    order = observed_order(LinearModel(-np.eye(1), dt), StateVector(np.array([1.0]), 0.0), 1.0, dt)
    low, high = ORDER_RANGE
    return CheckResult("rk4_order", low <= order <= high, order, 4.0,
                       {"range": list(ORDER_RANGE), "dt": dt})


def run_all_checks(corrupt_adjoint: bool = False,
                   logger: Optional[AuditLogger] = None,
                   progress_callback: Optional[Callable[[str], None]] = None) -> List[CheckResult]:
    """依次运行全部快速校验"""
    checks = [
        ("adjoint_identity", lambda: check_adjoint_identity(corrupt=corrupt_adjoint)),
        ("adjoint_gradient", lambda: check_gradient(corrupt=corrupt_adjoint)),
        ("prox_oracle", check_prox),
        ("3dvar_kalman", check_3dvar_kalman),
        ("ensrf_kalman", check_ensrf_kalman),
        ("rk4_order", check_rk4_order),
    ]
    results = []
    for name, check in checks:
        if progress_callback is not None:
            progress_callback(name)
        started = time.perf_counter()
        result = check()
        result.elapsed = time.perf_counter() - started
        results.append(result)
        if logger is not None:
            logger.log_check_performed(result.name, result.passed, result.value, result.threshold,
                                       result.details)
    return results
