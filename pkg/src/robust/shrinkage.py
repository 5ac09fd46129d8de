from enum import Enum

import numpy as np

from .norms import HuberParams, huber_elementwise
from ..exceptions import DimensionError


class ShrinkMode(str, Enum):
    ELEMENTWISE = "elementwise"
    BLOCK = "block"


def _prepare(mu: float, d: np.ndarray, lam: np.ndarray):
    if mu <= 0:
        raise ValueError(f"罚参数 mu 必须为正: {mu}")
    d = np.asarray(d, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if d.shape != lam.shape:
        raise DimensionError(f"d 与 lambda 形状不一致: {d.shape} vs {lam.shape}")
    return d, lam, d - lam / mu


def soft_threshold(v: np.ndarray, threshold: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - threshold, 0.0)


def _block_factor(v: np.ndarray, threshold: float) -> float:
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        return 0.0
    return max(norm - threshold, 0.0) / norm


def l1_shrinkage(mu: float, d: np.ndarray, lam: np.ndarray,
                 mode: ShrinkMode = ShrinkMode.ELEMENTWISE, weight: float = 1.0) -> np.ndarray:
    """min_z weight*|z|_1 + mu/2 |d - z - lambda/mu|^2 的收缩解

    elementwise 为逐分量软阈值 (精确近端算子); block 为整体 2-范数收缩。
    """
    d, lam, v = _prepare(mu, d, lam)
    threshold = weight / mu
    if ShrinkMode(mode) is ShrinkMode.BLOCK:
        return _block_factor(v, threshold) * v
    return soft_threshold(v, threshold)


def _huber_prox(v: np.ndarray, mu: float, tau: float) -> np.ndarray:
    # 三个凸分段各自的最小点, 取目标值最小者
    candidates = np.stack([
        np.clip(mu * v / (1.0 + mu), -tau, tau),
        np.maximum(v - 1.0 / mu, tau),
        np.minimum(v + 1.0 / mu, -tau),
    ])
    params = HuberParams(tau=tau)
    objective = huber_elementwise(candidates, params) + 0.5 * mu * (candidates - v) ** 2
    best = np.argmin(objective, axis=0)
    return np.take_along_axis(candidates, best[None, ...], axis=0)[0]


def huber_shrinkage(mu: float, d: np.ndarray, lam: np.ndarray, p: HuberParams,
                    mode: ShrinkMode = ShrinkMode.ELEMENTWISE) -> np.ndarray:
    """min_z |z|_hub + mu/2 |d - z - lambda/mu|^2 的收缩解

    elementwise 返回逐分量精确最小点; block 按 |d_l| >= tau 分支,
    线性分支使用整体 2-范数收缩因子。
    """
    d, lam, v = _prepare(mu, d, lam)
    if ShrinkMode(mode) is ShrinkMode.BLOCK:
        factor = _block_factor(v, 1.0 / mu)
        return np.where(np.abs(d) >= p.tau, factor * v, mu / (1.0 + mu) * v)
    return _huber_prox(v, mu, p.tau)
