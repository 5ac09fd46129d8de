import math
from typing import List, Union

import numpy as np

from .base import DynamicalModel
from .lorenz96 import Lorenz96Model
from .state import ModelConfig, StateVector, Trajectory
from ..exceptions import DimensionError, NonFiniteError

ModelLike = Union[ModelConfig, DynamicalModel]


def as_model(model: ModelLike) -> DynamicalModel:
    """ModelConfig 视为 Lorenz-96 模型, 其它模型原样返回"""
    if isinstance(model, DynamicalModel):
        return model
    if isinstance(model, ModelConfig):
        return Lorenz96Model(model)
    raise TypeError(f"不支持的模型类型: {type(model).__name__}")


def step_sizes(t0: float, t_end: float, dt: float) -> List[float]:
    """固定步长序列, 最后一步缩短以恰好落在 t_end"""
    span = t_end - t0
    if span <= 0:
        raise ValueError(f"积分终点 {t_end} 必须晚于起点 {t0}")
    n_full = int(math.floor(span / dt + 1e-9))
    steps = [dt] * n_full
    remainder = span - n_full * dt
    if remainder > 1e-12 * max(1.0, span):
        steps.append(remainder)
    if not steps:
        steps.append(span)
    return steps


def rk4_step(model: DynamicalModel, x: np.ndarray, h: float) -> np.ndarray:
    k1 = model.rhs(x)
    k2 = model.rhs(x + 0.5 * h * k1)
    k3 = model.rhs(x + 0.5 * h * k2)
    k4 = model.rhs(x + h * k3)
    return x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _step_times(t0: float, t_end: float, steps: List[float]) -> np.ndarray:
    times = t0 + np.arange(1, len(steps) + 1) * steps[0]
    times[-1] = t_end
    return times


def integrate(x0: StateVector, t_end: float, model: ModelLike) -> Trajectory:
    """经典四阶 Runge-Kutta 积分, 保存每一步的状态 (含初值)"""
    m = as_model(model)
    x = m.check_dim(x0.values, "x0").copy()
    steps = step_sizes(x0.time, t_end, m.dt)

    values = np.empty((len(steps) + 1, m.dim))
    values[0] = x
    for i, h in enumerate(steps):
        x = rk4_step(m, x, h)
        if not np.all(np.isfinite(x)):
            raise NonFiniteError(f"积分在 t={x0.time + sum(steps[:i + 1]):.6g} 处发散")
        values[i + 1] = x

    times = np.concatenate([[x0.time], _step_times(x0.time, t_end, steps)])
    return Trajectory(times, values)


def forecast(x0: StateVector, t_end: float, model: ModelLike) -> StateVector:
    """只返回终点状态的积分"""
    if abs(t_end - x0.time) <= 1e-12:
        return x0
    return integrate(x0, t_end, model).final


def propagate_ensemble(members: np.ndarray, t0: float, t1: float, model: ModelLike) -> np.ndarray:
    """对集合矩阵 (n, N) 的所有成员同时积分"""
    m = as_model(model)
    x = m.check_dim(members, "members").copy()
    if abs(t1 - t0) <= 1e-12:
        return x
    for h in step_sizes(t0, t1, m.dt):
        x = rk4_step(m, x, h)
    if not np.all(np.isfinite(x)):
        raise NonFiniteError(f"集合积分在 [{t0}, {t1}] 内发散")
    return x


def _check_perturbation(traj: Trajectory, vector: np.ndarray, name: str) -> np.ndarray:
    vector = np.asarray(vector, dtype=float)
    if vector.shape != (traj.dim,):
        raise DimensionError(f"{name} 形状为 {vector.shape}, 轨迹维数为 {traj.dim}")
    return vector


def tangent_linear(traj: Trajectory, dx0: np.ndarray, model: ModelLike) -> np.ndarray:
    """离散 RK4 映射的切线性模型, 沿 integrate 产生的轨迹传播扰动"""
    m = as_model(model)
    dx = _check_perturbation(traj, dx0, "dx0").copy()
    for k in range(len(traj) - 1):
        h = traj.times[k + 1] - traj.times[k]
        x = traj.values[k]
        k1 = m.rhs(x)
        x2 = x + 0.5 * h * k1
        k2 = m.rhs(x2)
        x3 = x + 0.5 * h * k2
        k3 = m.rhs(x3)
        x4 = x + h * k3

        d1 = m.jvp(x, dx)
        d2 = m.jvp(x2, dx + 0.5 * h * d1)
        d3 = m.jvp(x3, dx + 0.5 * h * d2)
        d4 = m.jvp(x4, dx + h * d3)
        dx = dx + h / 6.0 * (d1 + 2.0 * d2 + 2.0 * d3 + d4)
    return dx


def adjoint(traj: Trajectory, dxN: np.ndarray, model: ModelLike) -> np.ndarray:
    """离散 RK4 切线性映射的转置 (先微分后转置, 逐级反向)"""
    m = as_model(model)
    a = _check_perturbation(traj, dxN, "dxN").copy()
    for k in range(len(traj) - 2, -1, -1):
        h = traj.times[k + 1] - traj.times[k]
        x = traj.values[k]
        k1 = m.rhs(x)
        x2 = x + 0.5 * h * k1
        k2 = m.rhs(x2)
        x3 = x + 0.5 * h * k2
        k3 = m.rhs(x3)
        x4 = x + h * k3

        a_dx = a.copy()
        a_k1 = h / 6.0 * a
        a_k2 = h / 3.0 * a
        a_k3 = h / 3.0 * a
        a_k4 = h / 6.0 * a

        t4 = m.vjp(x4, a_k4)
        a_dx += t4
        a_k3 = a_k3 + h * t4

        t3 = m.vjp(x3, a_k3)
        a_dx += t3
        a_k2 = a_k2 + 0.5 * h * t3

        t2 = m.vjp(x2, a_k2)
        a_dx += t2
        a_k1 = a_k1 + 0.5 * h * t2

        a_dx += m.vjp(x, a_k1)
        a = a_dx
    return a


def observed_order(model: DynamicalModel, x0: StateVector, t_end: float, dt: float) -> float:
    """以 dt/16 的解为参照, 由 dt 与 dt/2 的误差比估计收敛阶"""
    reference = forecast(x0, t_end, model.with_dt(dt / 16.0)).values
    coarse = forecast(x0, t_end, model.with_dt(dt)).values
    fine = forecast(x0, t_end, model.with_dt(dt / 2.0)).values
    err_coarse = np.linalg.norm(coarse - reference)
    err_fine = np.linalg.norm(fine - reference)
    return float(np.log2(err_coarse / err_fine))
