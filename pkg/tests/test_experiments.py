import unittest

import numpy as np

from src.audit import AuditLogger, EventType
from src.config import DataQuality, ExperimentConfig, OutlierSchedule
from src.exceptions import DimensionError
from src.experiments import (
    RmseSeries,
    grid_configs,
    make_reference,
    outlier_times,
    prepare_twin,
    rmse,
    run_experiment,
    run_grid,
    synthesize_observations,
    time_averaged_magnitude,
)
from src.model import ModelConfig, StateVector


def _small_config(method: str = "3dvar", **overrides) -> ExperimentConfig:
    """n = 8、窗口 0.2 的小型孪生实验, 只用两种范数和 3 次外迭代"""
    raw = {
        "method": method,
        "label": f"small_{method}",
        "norms": ["l2", "l1_admm"],
        "window": 0.2,
        "model": {"n": 8},
        "observations": {"frequency": 0.1, "outliers": {"period": 0.2}},
        "solver": {"outer_iters": 3},
        "ensemble": {"n_ens": 5, "localization": {"radius": 2}},
        "logging": {"enabled": False},
    }
    raw.update(overrides)
    return ExperimentConfig(**raw)


class TestMetrics(unittest.TestCase):
    """RMSE 与序列类型测试"""

    def test_rmse(self):
        self.assertAlmostEqual(rmse(np.array([3.0, 4.0]), np.zeros(2)), 5.0 / np.sqrt(2.0))
        self.assertEqual(rmse(StateVector(np.ones(3)), StateVector(np.ones(3))), 0.0)

    def test_rmse_dimension_mismatch(self):
        with self.assertRaises(DimensionError):
            rmse(np.zeros(2), np.zeros(3))

    def test_series_validation(self):
        with self.assertRaises(DimensionError):
            RmseSeries(np.zeros(2), np.zeros(3), "x", "3dvar", "l2", 1.0, 0, "good")
        with self.assertRaises(ValueError):
            RmseSeries(np.zeros(1), np.array([np.nan]), "x", "3dvar", "l2", 1.0, 0, "good")


class TestObservations(unittest.TestCase):
    """参考解与观测合成测试"""

    def setUp(self):
        self.ref = make_reference(ModelConfig(n=8), 0.4)

    def test_reference_window(self):
        """测试参考解从 0 开始, 每步保存一个状态"""
        self.assertEqual(float(self.ref.times[0]), 0.0)
        self.assertAlmostEqual(float(self.ref.times[-1]), 0.4)
        self.assertEqual(len(self.ref), 81)

    def test_reference_without_spinup_starts_at_linspace(self):
        ref = make_reference(ModelConfig(n=8, spinup=0.0), 0.1)
        np.testing.assert_allclose(ref.initial.values, np.linspace(-2.0, 2.0, 8))

    def test_reference_requires_window_for_model_config(self):
        with self.assertRaises(ValueError):
            make_reference(ModelConfig(n=8))

    def test_noise_free_observations(self):
        """测试零噪声时观测等于参考解, R 取单位方差"""
        obs_seq = synthesize_observations(self.ref, 0.1, 0.0, None, seed=0)
        self.assertEqual([round(o.time, 9) for o in obs_seq], [0.1, 0.2, 0.3, 0.4])
        for obs in obs_seq:
            np.testing.assert_allclose(obs.values, self.ref.at(obs.time).values)
            np.testing.assert_allclose(obs.obs_cov.to_dense(), np.eye(8))

    def test_outliers_added_on_schedule(self):
        """测试离群值按周期加在指定通道上, 且好/坏数据噪声相同"""
        sched = OutlierSchedule(channels=[0], magnitude_sigma=100.0, period=0.2)
        magnitude = time_averaged_magnitude(self.ref)
        good = synthesize_observations(self.ref, 0.1, 0.05, None, seed=3)
        bad = synthesize_observations(self.ref, 0.1, 0.05, sched, seed=3)
        std = 0.05 * magnitude
        for g, b in zip(good, bad):
            diff = b.values - g.values
            np.testing.assert_allclose(diff[1:], 0.0)
            expected = 100.0 * std if abs(g.time / 0.2 - round(g.time / 0.2)) < 1e-9 else 0.0
            self.assertAlmostEqual(float(diff[0]), expected, places=9)

    def test_outliers_every_time_when_period_empty(self):
        sched = OutlierSchedule(period=None, sign=-1)
        times = [0.1, 0.2, 0.3]
        self.assertEqual(outlier_times(times, 0.0, sched), times)
        bad = synthesize_observations(self.ref, 0.1, 0.05, sched, seed=0)
        for obs in bad:
            self.assertLess(obs.values[0], self.ref.at(obs.time).values[0])

    def test_outlier_times_skip_window_start(self):
        sched = OutlierSchedule(period=0.2)
        self.assertEqual(outlier_times([0.1, 0.2, 0.3, 0.4], 0.0, sched), [0.2, 0.4])

    def test_same_seed_same_noise(self):
        a = synthesize_observations(self.ref, 0.1, 0.05, None, seed=11)
        b = synthesize_observations(self.ref, 0.1, 0.05, None, seed=11)
        c = synthesize_observations(self.ref, 0.1, 0.05, None, seed=12)
        np.testing.assert_array_equal(a[2].values, b[2].values)
        self.assertFalse(np.allclose(a[2].values, c[2].values))

    def test_frequency_must_divide_window(self):
        with self.assertRaises(ValueError):
            synthesize_observations(self.ref, 0.3, 0.05, None, seed=0)

    def test_subset_observations(self):
        obs_seq = synthesize_observations(self.ref, 0.2, 0.0, None, seed=0, observed_indices=[1, 3])
        self.assertEqual(obs_seq[0].dim, 2)
        np.testing.assert_allclose(obs_seq[0].values, self.ref.at(0.2).values[[1, 3]])


class TestTwinExperiment(unittest.TestCase):
    """孪生实验测试"""

    def test_prepare_twin_statistics(self):
        """测试背景误差与 B 的标准差均按幅值比例设定"""
        cfg = _small_config()
        setup = prepare_twin(cfg)
        np.testing.assert_allclose(np.sqrt(setup.background_cov.variances), 0.08 * setup.magnitude)
        self.assertEqual(set(setup.observations), {DataQuality.GOOD, DataQuality.BAD})
        self.assertFalse(np.allclose(setup.background.values, setup.reference.initial.values))

    def test_run_3dvar_series(self):
        """测试 3D-Var 实验输出自由预报基线和每个 (数据, 范数) 的序列"""
        logger = AuditLogger(enabled=False, level="debug")
        series = run_experiment(_small_config(), logger)
        labels = [s.label for s in series]
        self.assertEqual(labels, [
            "small_3dvar_forecast",
            "small_3dvar_good_l2",
            "small_3dvar_good_l1_admm",
            "small_3dvar_bad_l2",
            "small_3dvar_bad_l1_admm",
        ])
        self.assertEqual(series[0].norm, "none")
        self.assertEqual(series[0].data_quality, "none")
        for s in series:
            np.testing.assert_allclose(s.times, [0.1, 0.2])
            self.assertTrue(np.all(s.values >= 0))
        self.assertEqual(len(logger.search_events(event_type=EventType.CYCLE_COMPLETED)), 4)
        self.assertEqual(len(logger.search_events(event_type=EventType.ANALYSIS_COMPLETED)), 8)

    def test_run_is_deterministic(self):
        first = run_experiment(_small_config())
        second = run_experiment(_small_config())
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a.values, b.values)

    def test_analysis_beats_forecast_with_good_data(self):
        """测试好数据下 L2 分析误差低于自由预报"""
        series = run_experiment(_small_config(data_quality=["good"], norms=["l2"]))
        self.assertLess(series[1].final, series[0].final)

    def test_run_4dvar_includes_window_start(self):
        series = run_experiment(_small_config("4dvar", norms=["huber_hq"], data_quality=["bad"]))
        self.assertEqual(len(series), 2)
        np.testing.assert_allclose(series[1].times, [0.0, 0.1, 0.2])

    def test_run_ensrf(self):
        progress = []
        series = run_experiment(_small_config("ensrf", norms=["l2", "huber_admm"], data_quality=["bad"]),
                                progress_callback=progress.append)
        self.assertEqual(len(series), 3)
        self.assertEqual(progress, [s.label for s in series])
        self.assertEqual(series[2].method, "ensrf")


class TestGrids(unittest.TestCase):
    """实验网格测试"""

    def test_lorenz_3dvar_grid(self):
        """测试 3D-Var 网格: 2 个观测频率 × 2 个 tau, 共 32 条分析序列"""
        configs = grid_configs("lorenz_3dvar")
        self.assertEqual(len(configs), 4)
        analyses = sum(len(c.data_quality) * len(c.norms) for c in configs)
        self.assertEqual(analyses, 32)
        self.assertEqual({c.observations.frequency for c in configs}, {0.01, 0.1})
        self.assertEqual({c.tau for c in configs}, {1.0, 3.0})

    def test_seeds_expand_grid(self):
        configs = grid_configs("lorenz_letkf", seeds=2, base_seed=5)
        self.assertEqual(len(configs), 4)
        self.assertEqual(sorted({c.seed for c in configs}), [5, 6])
        self.assertEqual(len({c.run_label for c in configs}), 4)

    def test_4dvar_grid_corrupts_every_time(self):
        (cfg,) = grid_configs("lorenz_4dvar")
        self.assertIsNone(cfg.observations.outliers.period)
        self.assertEqual(cfg.window_length, 0.6)

    def test_unknown_protocol(self):
        with self.assertRaises(ValueError):
            grid_configs("lorenz_unknown")
        with self.assertRaises(ValueError):
            grid_configs("lorenz_3dvar", seeds=0)

    def test_run_grid_keeps_order(self):
        """测试并行运行时结果仍按配置顺序返回"""
        configs = [
            _small_config(label="first", norms=["l2"], data_quality=["good"]),
            _small_config(label="second", norms=["l2"], data_quality=["good"], seed=1),
        ]
        results = run_grid(configs, threads=2)
        self.assertEqual([cfg.run_label for cfg, _ in results], ["first", "second"])
        self.assertEqual(results[1][1][0].label, "second_forecast")
        self.assertEqual(run_grid([]), [])


if __name__ == '__main__':
    unittest.main()
