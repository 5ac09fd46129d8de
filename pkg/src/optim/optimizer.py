from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy import optimize

from ..exceptions import DimensionError, NonFiniteError

CostAndGradient = Callable[[np.ndarray], Tuple[float, np.ndarray]]


@dataclass
class OptimizeProblem:
    """光滑无约束最小化问题"""

    dim: int
    cost_and_gradient: CostAndGradient
    x0: np.ndarray

    def __post_init__(self):
        self.x0 = np.array(self.x0, dtype=float)
        if self.x0.shape != (self.dim,):
            raise DimensionError(f"初始点形状 {self.x0.shape} 与维数 {self.dim} 不一致")


@dataclass
class OptimizeReport:
    x_opt: np.ndarray
    cost: float
    grad_norm: float
    iterations: int
    converged: bool
    cost_history: List[float] = field(default_factory=list)
    message: str = ""


def default_tolerance(dim: int) -> float:
    return 1e-6 * np.sqrt(dim)


def _evaluate(problem: OptimizeProblem, x: np.ndarray) -> Tuple[float, np.ndarray]:
    cost, grad = problem.cost_and_gradient(x)
    cost = float(cost)
    grad = np.asarray(grad, dtype=float)
    if grad.shape != (problem.dim,):
        raise DimensionError(f"梯度形状 {grad.shape} 与维数 {problem.dim} 不一致")
    if not np.isfinite(cost) or not np.all(np.isfinite(grad)):
        raise NonFiniteError("代价函数或梯度出现 NaN/Inf")
    return cost, grad


def minimize(problem: OptimizeProblem, tol_grad: Optional[float] = None,
             max_iter: int = 200, memory: int = 10) -> OptimizeReport:
    """有限内存拟牛顿法 (L-BFGS, 记忆长度 memory) 加线搜索

    在 |grad|_inf <= tol_grad 或达到 max_iter 时停止, 返回点的代价不高于初始点。
    """
    tol = default_tolerance(problem.dim) if tol_grad is None else float(tol_grad)
    x0 = problem.x0.copy()
    f0, g0 = _evaluate(problem, x0)
    g0_norm = float(np.max(np.abs(g0))) if g0.size else 0.0
    if g0_norm <= tol or max_iter == 0:
        return OptimizeReport(x0, f0, g0_norm, 0, g0_norm <= tol, [f0], "初始点已满足梯度容差")

    best = {"x": x0, "f": f0, "g": g0}
    history = [f0]

    def fun(x):
        f, g = _evaluate(problem, x)
        if f < best["f"]:
            best.update(x=x.copy(), f=f, g=g.copy())
        return f, g

    def callback(xk):
        history.append(min(history[-1], best["f"]))

    result = optimize.minimize(
        fun,
        x0,
        jac=True,
        method="L-BFGS-B",
        callback=callback,
        options={
            "maxiter": max_iter,
            "maxcor": memory,
            "gtol": tol,
            "ftol": 0.0,
            "maxls": 40,
        },
    )

    x_opt, cost, grad = result.x, float(result.fun), np.asarray(result.jac, dtype=float)
    if best["f"] < cost:
        x_opt, cost, grad = best["x"], best["f"], best["g"]
    grad_norm = float(np.max(np.abs(grad)))
    return OptimizeReport(
        x_opt=np.array(x_opt, dtype=float),
        cost=cost,
        grad_norm=grad_norm,
        iterations=int(result.nit),
        converged=grad_norm <= tol,
        cost_history=history,
        message=str(result.message),
    )
