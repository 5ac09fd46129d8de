import os
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Callable, Dict, List, Optional, Tuple

from .twin import RmseSeries, run_experiment
from ..audit import AuditLogger
from ..config import ExperimentConfig

GRID_PROTOCOLS = ("lorenz_3dvar", "lorenz_4dvar", "lorenz_letkf")


def _lorenz_3dvar(seed: int) -> List[Dict]:
    return [
        {
            "method": "3dvar",
            "label": f"lorenz_3dvar_f{freq:g}_tau{tau:g}_seed{seed}",
            "tau": tau,
            "seed": seed,
            "observations": {"frequency": freq, "outliers": {"period": 0.2}},
        }
        for freq in (0.01, 0.1)
        for tau in (1.0, 3.0)
    ]


def _lorenz_4dvar(seed: int) -> List[Dict]:
    return [{
        "method": "4dvar",
        "label": f"lorenz_4dvar_tau2_seed{seed}",
        "tau": 2.0,
        "seed": seed,
        "window": 0.6,
        "observations": {"frequency": 0.1, "outliers": {"period": None}},
    }]


def _lorenz_letkf(seed: int) -> List[Dict]:
    return [
        {
            "method": "ensrf",
            "label": f"lorenz_letkf_f0.1_tau{tau:g}_seed{seed}",
            "tau": tau,
            "seed": seed,
            "observations": {"frequency": 0.1, "outliers": {"period": 0.2}},
            "ensemble": {"n_ens": 20, "inflation": 1.0, "localization": {"radius": 4}},
        }
        for tau in (1.0, 3.0)
    ]


_GRIDS = {
    "lorenz_3dvar": _lorenz_3dvar,
    "lorenz_4dvar": _lorenz_4dvar,
    "lorenz_letkf": _lorenz_letkf,
}


def grid_configs(protocol: str, seeds: int = 1, base_seed: int = 0) -> List[ExperimentConfig]:
    """展开一个实验网格: 每个种子下的 (观测频率, tau) 组合, 每个配置包含好/坏数据 × 四种范数"""
    if protocol not in _GRIDS:
        raise ValueError(f"未知的实验网格: {protocol}, 可选 {', '.join(GRID_PROTOCOLS)}")
    if seeds < 1:
        raise ValueError(f"种子数必须至少为 1: {seeds}")
    return [
        ExperimentConfig(**raw)
        for seed in range(base_seed, base_seed + seeds)
        for raw in _GRIDS[protocol](seed)
    ]


def run_grid(configs: List[ExperimentConfig],
             threads: int = 1,
             logger: Optional[AuditLogger] = None,
             progress_callback: Optional[Callable[[str], None]] = None
             ) -> List[Tuple[ExperimentConfig, List[RmseSeries]]]:
    """并行运行多组实验, 结果按配置顺序返回; 任一实验失败时抛出其异常"""
    if not configs:
        return []
    max_workers = max(1, min(threads, len(configs), os.cpu_count() or 1))

    results: List[Optional[List[RmseSeries]]] = [None] * len(configs)
    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        future_to_index = {
            executor.submit(run_experiment, cfg, logger, progress_callback): i
            for i, cfg in enumerate(configs)
        }
        for future in as_completed(future_to_index):
            results[future_to_index[future]] = future.result()

    return list(zip(configs, results))
