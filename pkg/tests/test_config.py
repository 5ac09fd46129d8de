import os
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

from src.config import ConfigManager, DataQuality, ExperimentConfig, Method
from src.exceptions import ConfigError
from src.robust import Norm


class TestConfigManager(unittest.TestCase):
    """配置加载与校验测试"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def _load(self, text: str) -> ExperimentConfig:
        path = self.dir / "experiment.yaml"
        path.write_text(text, encoding="utf-8")
        return ConfigManager(str(path)).load_config()

    def test_minimal_config_defaults(self):
        """测试只给出 method 时使用默认值"""
        cfg = self._load("method: 3dvar\n")
        self.assertEqual(cfg.method, Method.VAR3D)
        self.assertEqual(cfg.norms, list(Norm))
        self.assertEqual(cfg.data_quality, [DataQuality.GOOD, DataQuality.BAD])
        self.assertEqual(cfg.window_length, 2.0)
        self.assertEqual(cfg.model.n, 40)
        self.assertEqual(cfg.observations.outliers.magnitude_sigma, 100.0)
        self.assertEqual(cfg.run_label, "3dvar_f0.1_tau1_seed0")

    def test_default_windows_per_method(self):
        self.assertEqual(ExperimentConfig(method="4dvar").window_length, 0.6)
        self.assertEqual(ExperimentConfig(method="ensrf").window_length, 2.0)

    def test_missing_method_reports_key(self):
        """测试缺少必需项时报告键名"""
        with self.assertRaises(ConfigError) as ctx:
            self._load("tau: 2.0\nseed: 1\n")
        self.assertEqual(ctx.exception.key, "method")
        self.assertIn("缺少必需的配置项", str(ctx.exception))

    def test_invalid_value_reports_line(self):
        """测试非法取值时报告键名与行号"""
        with self.assertRaises(ConfigError) as ctx:
            self._load("method: 3dvar\nseed: 0\ntau: -1.0\n")
        self.assertEqual(ctx.exception.key, "tau")
        self.assertEqual(ctx.exception.line, 3)

    def test_nested_invalid_value(self):
        with self.assertRaises(ConfigError) as ctx:
            self._load("method: 3dvar\nsolver:\n  outer_iters: 15\n  rho: 0.5\n")
        self.assertEqual(ctx.exception.key, "solver.rho")
        self.assertEqual(ctx.exception.line, 4)

    def test_unknown_key_rejected(self):
        with self.assertRaises(ConfigError) as ctx:
            self._load("method: 3dvar\nunknown_key: 1\n")
        self.assertEqual(ctx.exception.key, "unknown_key")
        self.assertEqual(ctx.exception.line, 2)

    def test_yaml_syntax_error(self):
        with self.assertRaises(ConfigError) as ctx:
            self._load("method: 3dvar\nnorms: [l2, l1_admm\n")
        self.assertIsNotNone(ctx.exception.line)

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            ConfigManager(str(self.dir / "absent.yaml")).load_config()

    def test_frequency_must_divide_window(self):
        """测试观测间隔必须整除窗口长度"""
        with self.assertRaises(ConfigError):
            self._load("method: 3dvar\nwindow: 1.0\nobservations:\n  frequency: 0.3\n")

    def test_outlier_channel_out_of_range(self):
        with self.assertRaises(ConfigError):
            self._load("method: 3dvar\nobservations:\n  observed_indices: [0, 1]\n"
                       "  outliers:\n    channels: [5]\n")

    def test_data_quality_none_rejected(self):
        with self.assertRaises(ConfigError) as ctx:
            self._load("method: 3dvar\ndata_quality: [none]\n")
        self.assertEqual(ctx.exception.key, "data_quality")

    def test_duplicate_norms_rejected(self):
        with self.assertRaises(ConfigError):
            self._load("method: 3dvar\nnorms: [l2, l2]\n")

    def test_save_and_reload(self):
        """测试保存后重新加载得到相同配置"""
        path = self.dir / "sub" / "saved.yaml"
        original = ExperimentConfig(method="ensrf", tau=3.0, seed=4,
                                    ensemble={"n_ens": 10, "localization": {"radius": 3}})
        ConfigManager(str(path)).save_config(original)
        loaded = ConfigManager(str(path)).load_config()
        self.assertEqual(loaded.model_dump(), original.model_dump())

    def test_config_property_loads_lazily(self):
        path = self.dir / "lazy.yaml"
        path.write_text("method: 4dvar\n", encoding="utf-8")
        manager = ConfigManager(str(path))
        self.assertEqual(manager.config.method, Method.VAR4D)

    def test_env_overrides_config(self):
        manager = ConfigManager()
        with patch.dict(os.environ, {"ROBUST_DA_THREADS": "4"}):
            self.assertEqual(manager.get_env_or_config("ROBUST_DA_THREADS", 1), "4")
        with patch.dict(os.environ, {}, clear=True):
            self.assertEqual(manager.get_env_or_config("ROBUST_DA_THREADS", 1), 1)


if __name__ == '__main__':
    unittest.main()
