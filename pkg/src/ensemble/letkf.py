from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .ensemble import Ensemble
from .robust_enkf import EnkfConfig, analyze_weights
from ..model import propagate_ensemble
from ..model.state import TIME_TOL
from ..observation import ObservationSet


class LocalizationConfig(BaseModel):
    """截断半径局地化: 每个格点只使用循环距离不超过 radius 的观测"""

    model_config = ConfigDict(extra="forbid")

    radius: int = Field(4, ge=0)
    enabled: bool = True

    @model_validator(mode="after")
    def _check_radius(self):
        if self.enabled and self.radius < 1:
            raise ValueError("启用局地化时 radius 必须至少为 1")
        return self


def cyclic_distance(index: int, locations: np.ndarray, n: int) -> np.ndarray:
    diff = np.abs(np.asarray(locations, dtype=int) - index) % n
    return np.minimum(diff, n - diff)


def local_rows(index: int, locations: np.ndarray, n: int, radius: int) -> np.ndarray:
    return np.flatnonzero(cyclic_distance(index, locations, n) <= radius)


def local_analysis(ens: Ensemble, obs: ObservationSet, loc: LocalizationConfig,
                   cfg: EnkfConfig) -> Tuple[Ensemble, Dict[str, Any]]:
    """对每个格点独立做局地集合分析并重新拼装全局集合"""
    ens = ens.observed(obs.operator)
    Y, obs_mean = ens.obs_deviations, ens.obs_mean

    if not loc.enabled:
        analysis = analyze_weights(Y, obs_mean, obs, cfg)
        return analysis.apply(ens), {"local_analyses": 1, "mu_final": analysis.diagnostics.get("mu_final")}

    locations = obs.operator.locations
    if locations is None:
        raise ValueError("局地化需要观测算子提供观测位置")

    members = ens.members.copy()
    mu_finals = []
    count = 0
    for i in range(ens.dim):
        rows = local_rows(i, locations, ens.dim, loc.radius)
        if rows.size == 0:
            continue
        analysis = analyze_weights(Y[rows], obs_mean[rows], obs.subset(rows), cfg)
        members[i] = ens.mean[i] + ens.deviations[i] @ analysis.member_weights
        count += 1
        if "mu_final" in analysis.diagnostics:
            mu_finals.append(analysis.diagnostics["mu_final"])

    diagnostics = {
        "local_analyses": count,
        "mu_final": max(mu_finals) if mu_finals else None,
    }
    return Ensemble(members, ens.time, ens.operator), diagnostics


def letkf_cycle(ens0: Ensemble, obs_seq: Sequence[ObservationSet], loc: LocalizationConfig,
                cfg: EnkfConfig,
                callback: Optional[Callable[[int, Ensemble, Dict[str, Any]], None]] = None
                ) -> List[Tuple[Ensemble, Dict[str, Any]]]:
    """循环局地集合变换卡尔曼滤波: 整体传播集合, 乘性膨胀, 再做局地分析"""
    times = [obs.time for obs in obs_seq]
    if any(t1 <= t0 for t0, t1 in zip(times, times[1:])):
        raise ValueError("观测时刻必须严格递增")

    model = cfg.dynamics
    results: List[Tuple[Ensemble, Dict[str, Any]]] = []
    ens = ens0
    for i, obs in enumerate(obs_seq):
        if obs.time < ens.time - TIME_TOL:
            raise ValueError(f"观测时刻 {obs.time} 早于集合时刻 {ens.time}")
        members = propagate_ensemble(ens.members, ens.time, obs.time, model) \
            if obs.time > ens.time + TIME_TOL else ens.members
        background = Ensemble(members, obs.time).inflated(cfg.inflation)
        analysis, diagnostics = local_analysis(background, obs, loc, cfg)
        diagnostics.update({"time": obs.time, "norm": cfg.norm.value,
                            "background_mean": background.mean.copy()})
        results.append((analysis, diagnostics))
        if callback is not None:
            callback(i, analysis, diagnostics)
        ens = analysis
    return results
