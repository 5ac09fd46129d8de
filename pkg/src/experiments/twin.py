import time
from dataclasses import dataclass, fields
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..audit import AuditLogger
from ..config import DataQuality, ExperimentConfig, Method, OutlierSchedule
from ..ensemble import EnkfConfig, letkf_cycle, make_initial_ensemble
from ..exceptions import DimensionError
from ..model import ModelConfig, StateVector, Trajectory, as_model, integrate
from ..model.state import TIME_TOL
from ..observation import DiagonalCovariance, IdentityOperator, IndexSubsetOperator, ObservationSet
from ..robust import HuberParams, Norm
from ..var import Var3dConfig, Var4dConfig, cycle_3dvar, solve_4dvar

SeedLike = Union[int, np.random.SeedSequence]


@dataclass(eq=False)
class RmseSeries:
    """一条 RMSE 时间序列及其标识"""

    times: np.ndarray
    values: np.ndarray
    label: str
    method: str
    norm: str
    tau: float
    seed: int
    data_quality: str

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape or self.times.ndim != 1:
            raise DimensionError(f"时间与 RMSE 长度不一致: {self.times.shape} vs {self.values.shape}")
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0):
            raise ValueError(f"序列 {self.label} 含有非有限或负的 RMSE")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def final(self) -> float:
        return float(self.values[-1])


def make_reference(cfg: Union[ExperimentConfig, ModelConfig], window: Optional[float] = None) -> Trajectory:
    """参考解: linspace(-2, 2, n) 初值预热 spinup 个时间单位, 再积分整个实验窗口 (时间原点重置为 0)"""
    model_cfg = cfg.model if isinstance(cfg, ExperimentConfig) else cfg
    if window is None:
        if not isinstance(cfg, ExperimentConfig):
            raise ValueError("只给出 ModelConfig 时必须指定 window")
        window = cfg.window_length

    model = as_model(model_cfg)
    x = StateVector(np.linspace(-2.0, 2.0, model_cfg.n), 0.0)
    if model_cfg.spinup > 0:
        x = StateVector(integrate(x, model_cfg.spinup, model).final.values, 0.0)
    return integrate(x, window, model)


def time_averaged_magnitude(ref: Trajectory) -> float:
    """参考解在时间和分量上的平均绝对值, 用于设定 B 与 R 的标准差"""
    return float(np.mean(np.abs(ref.values)))


def _is_multiple(offset: float, period: float) -> bool:
    k = offset / period
    return round(k) >= 1 and abs(k - round(k)) < 1e-6


def outlier_times(times: Sequence[float], t0: float, sched: Optional[OutlierSchedule]) -> List[float]:
    if sched is None or not sched.channels:
        return []
    if sched.period is None:
        return list(times)
    return [t for t in times if _is_multiple(t - t0, sched.period)]


def synthesize_observations(ref: Trajectory,
                            freq: float,
                            noise_std_frac: float,
                            sched: Optional[OutlierSchedule],
                            seed: SeedLike,
                            observed_indices: Optional[Sequence[int]] = None,
                            magnitude: Optional[float] = None) -> List[ObservationSet]:
    """在参考解上加高斯噪声生成观测, 并按计划注入离群值

    噪声标准差为 noise_std_frac 乘以时间平均幅值; 同一 seed 下有无离群值的两组观测噪声完全相同。
    噪声为零时 R 取单位方差。
    """
    if freq <= 0:
        raise ValueError(f"观测间隔必须为正: {freq}")
    t0, t_end = float(ref.times[0]), float(ref.times[-1])
    count = int(round((t_end - t0) / freq))
    if count < 1 or abs(count * freq - (t_end - t0)) > 1e-9:
        raise ValueError(f"观测间隔 {freq} 不能整除窗口 [{t0}, {t_end}]")
    times = [t0 + k * freq for k in range(1, count + 1)]

    n = ref.dim
    operator = IdentityOperator(n) if observed_indices is None else IndexSubsetOperator(n, observed_indices)
    m = operator.output_dim

    magnitude = time_averaged_magnitude(ref) if magnitude is None else magnitude
    std = noise_std_frac * magnitude
    obs_cov = DiagonalCovariance.from_std(std if std > 0 else 1.0, m)

    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((count, m)) * std

    bad_times = outlier_times(times, t0, sched)
    observations = []
    for k, t in enumerate(times):
        values = operator(ref.at(t).values) + noise[k]
        if any(abs(t - b) <= TIME_TOL for b in bad_times):
            values[list(sched.channels)] += sched.sign * sched.magnitude_sigma * std
        observations.append(ObservationSet(t, values, obs_cov, operator))
    return observations


def rmse(x: Union[StateVector, np.ndarray], x_true: Union[StateVector, np.ndarray]) -> float:
    """n^{-1/2} |x - x_true|"""
    a = x.values if isinstance(x, StateVector) else np.asarray(x, dtype=float)
    b = x_true.values if isinstance(x_true, StateVector) else np.asarray(x_true, dtype=float)
    if a.shape != b.shape:
        raise DimensionError(f"状态维数不一致: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b) / np.sqrt(a.size))


def var3d_config(cfg: ExperimentConfig, norm: Norm, background_cov: DiagonalCovariance) -> Var3dConfig:
    s = cfg.solver
    return Var3dConfig(
        background_cov=background_cov,
        norm=norm,
        huber=HuberParams(tau=cfg.tau),
        outer_iters=s.outer_iters,
        mu0=s.mu0,
        rho=s.rho,
        shrink_mode=s.shrink_mode,
        l1_weight=s.l1_weight,
        laplace_scale=s.laplace_scale,
        tol_grad=s.tol_grad,
        max_iter=s.max_iter,
        model=cfg.model,
    )


def var4d_config(cfg: ExperimentConfig, norm: Norm, background_cov: DiagonalCovariance) -> Var4dConfig:
    base = var3d_config(cfg, norm, background_cov)
    values = {f.name: getattr(base, f.name) for f in fields(base)}
    return Var4dConfig(**values, window=(0.0, cfg.window_length))


def enkf_config(cfg: ExperimentConfig, norm: Norm) -> EnkfConfig:
    s = cfg.solver
    return EnkfConfig(
        norm=norm,
        huber=HuberParams(tau=cfg.tau),
        outer_iters=s.outer_iters,
        mu0=s.mu0,
        rho=s.rho,
        shrink_mode=s.shrink_mode,
        l1_weight=s.l1_weight,
        laplace_scale=s.laplace_scale,
        inflation=cfg.ensemble.inflation,
        model=cfg.model,
    )


@dataclass
class TwinSetup:
    """一次孪生实验共享的参考解、背景和两组观测"""

    reference: Trajectory
    magnitude: float
    background: StateVector
    background_cov: DiagonalCovariance
    observations: Dict[DataQuality, List[ObservationSet]]
    ensemble_seed: np.random.SeedSequence


def prepare_twin(cfg: ExperimentConfig) -> TwinSetup:
    bg_seed, obs_seed, ens_seed = np.random.SeedSequence(cfg.seed).spawn(3)

    ref = make_reference(cfg)
    magnitude = time_averaged_magnitude(ref)
    n = cfg.model.n
    b_std = cfg.observations.background_frac * magnitude
    background_cov = DiagonalCovariance.from_std(b_std, n)
    noise = np.random.default_rng(bg_seed).standard_normal(n) * b_std
    background = StateVector(ref.initial.values + noise, ref.times[0])

    o = cfg.observations
    observations = {
        quality: synthesize_observations(
            ref, o.frequency, o.noise_frac,
            o.outliers if quality == DataQuality.BAD else None,
            obs_seed, o.observed_indices, magnitude)
        for quality in cfg.data_quality
    }
    return TwinSetup(ref, magnitude, background, background_cov, observations, ens_seed)


def series_times(cfg: ExperimentConfig, obs_seq: Sequence[ObservationSet]) -> List[float]:
    """3D-Var 与 EnSRF 在观测时刻评估; 4D-Var 另加窗口起点"""
    times = [obs.time for obs in obs_seq]
    if cfg.method == Method.VAR4D:
        return [0.0] + times
    return times


def _analysis_states(cfg: ExperimentConfig, setup: TwinSetup, norm: Norm,
                     obs_seq: List[ObservationSet], on_analysis: Callable) -> List[Tuple[float, np.ndarray]]:
    if cfg.method == Method.VAR3D:
        results = cycle_3dvar(setup.background, obs_seq, var3d_config(cfg, norm, setup.background_cov),
                              callback=lambda i, r: on_analysis(obs_seq[i].time, {
                                  "final_residual": r.final_residual,
                                  "inner_iterations": r.total_inner_iterations}))
        return [(r.analysis.time, r.analysis.values) for r in results]

    if cfg.method == Method.VAR4D:
        result = solve_4dvar(setup.background, obs_seq, var4d_config(cfg, norm, setup.background_cov))
        on_analysis(0.0, {"final_residual": result.final_residual,
                          "inner_iterations": result.total_inner_iterations})
        return [(t, result.trajectory.at(t).values) for t in series_times(cfg, obs_seq)]

    ens0 = make_initial_ensemble(setup.background, setup.background_cov, cfg.ensemble.n_ens,
                                 np.random.default_rng(setup.ensemble_seed))
    results = letkf_cycle(ens0, obs_seq, cfg.ensemble.localization, enkf_config(cfg, norm),
                          callback=lambda i, ens, diag: on_analysis(diag["time"], {
                              "mu_final": diag.get("mu_final"),
                              "local_analyses": diag.get("local_analyses")}))
    return [(ens.time, ens.mean) for ens, _ in results]


def forecast_series(cfg: ExperimentConfig, setup: TwinSetup) -> RmseSeries:
    """背景初值的自由预报, 与方法和数据质量无关"""
    obs_seq = next(iter(setup.observations.values()))
    times = series_times(cfg, obs_seq)
    free_run = integrate(setup.background, cfg.window_length, as_model(cfg.model))
    values = [rmse(free_run.at(t), setup.reference.at(t)) for t in times]
    return RmseSeries(np.array(times), np.array(values), f"{cfg.run_label}_forecast",
                      cfg.method.value, "none", cfg.tau, cfg.seed, DataQuality.NONE.value)


def run_experiment(cfg: ExperimentConfig,
                   logger: Optional[AuditLogger] = None,
                   progress_callback: Optional[Callable[[str], None]] = None) -> List[RmseSeries]:
    """运行一次孪生实验: 自由预报基线, 以及每种数据质量和每种范数的分析 RMSE 序列"""
    label = cfg.run_label
    if logger is not None:
        logger.log_run_started(label, cfg.method.value, [n.value for n in cfg.norms], cfg.seed,
                               {"window": cfg.window_length, "frequency": cfg.observations.frequency,
                                "tau": cfg.tau})

    setup = prepare_twin(cfg)
    series = [forecast_series(cfg, setup)]
    if progress_callback is not None:
        progress_callback(series[0].label)

    for quality in cfg.data_quality:
        obs_seq = setup.observations[quality]
        for norm in cfg.norms:
            series_label = f"{label}_{quality.value}_{norm.value}"

            def on_analysis(t, diagnostics, _norm=norm):
                if logger is not None:
                    logger.log_analysis_completed(series_label, _norm.value, t, diagnostics)

            started = time.perf_counter()
            states = _analysis_states(cfg, setup, norm, obs_seq, on_analysis)
            times = np.array([t for t, _ in states])
            values = np.array([rmse(x, setup.reference.at(t)) for t, x in states])
            item = RmseSeries(times, values, series_label, cfg.method.value, norm.value,
                              cfg.tau, cfg.seed, quality.value)
            series.append(item)

            if logger is not None:
                logger.log_cycle_completed(series_label, norm.value, quality.value, len(item),
                                           item.final, time.perf_counter() - started)
            if progress_callback is not None:
                progress_callback(series_label)

    return series
