import json
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

import numpy as np
from typer.testing import CliRunner

from src.config import ConfigManager, Method
from src.exceptions import NonFiniteError
from src.experiments import RmseSeries
from src.ui import CSV_HEADER, app, read_series_csv, write_run_outputs
from src.verify import CheckResult

SMALL_CONFIG = """method: 3dvar
label: cli_small
norms: [l2, huber_hq]
data_quality: [bad]
window: 0.2
model:
  n: 8
observations:
  frequency: 0.1
  outliers:
    period: 0.2
solver:
  outer_iters: 3
logging:
  enabled: false
"""


class TestCli(unittest.TestCase):
    """命令行测试"""

    def setUp(self):
        self.runner = CliRunner()

    def test_run_writes_outputs(self):
        """测试 run 命令写出每条序列、合并文件和清单"""
        with self.runner.isolated_filesystem():
            Path("small.yaml").write_text(SMALL_CONFIG, encoding="utf-8")
            result = self.runner.invoke(app, ["run", "small.yaml", "--out", "out"])
            self.assertEqual(result.exit_code, 0, result.output)

            out = Path("out")
            for label in ("cli_small_forecast", "cli_small_bad_l2", "cli_small_bad_huber_hq"):
                self.assertTrue((out / f"{label}.csv").exists(), label)
            manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
            self.assertEqual(manifest["seeds"], [0])
            self.assertEqual(len(manifest["files"]), 3)
            self.assertEqual(len(read_series_csv(str(out / "combined.csv"))), 6)
            self.assertEqual(list(out.glob(".staging_*")), [])

    def test_run_is_reproducible(self):
        """测试相同配置两次运行的 CSV 完全一致"""
        with self.runner.isolated_filesystem():
            Path("small.yaml").write_text(SMALL_CONFIG, encoding="utf-8")
            self.assertEqual(self.runner.invoke(app, ["run", "small.yaml", "-o", "a"]).exit_code, 0)
            self.assertEqual(self.runner.invoke(app, ["run", "small.yaml", "-o", "b"]).exit_code, 0)
            first = Path("a/cli_small_bad_huber_hq.csv").read_text(encoding="utf-8")
            second = Path("b/cli_small_bad_huber_hq.csv").read_text(encoding="utf-8")
            self.assertEqual(first, second)

    def test_run_config_error_exit_code(self):
        with self.runner.isolated_filesystem():
            Path("bad.yaml").write_text("tau: 2.0\n", encoding="utf-8")
            result = self.runner.invoke(app, ["run", "bad.yaml"])
            self.assertEqual(result.exit_code, 1)
            self.assertIn("method", result.output)

    def test_run_numerical_failure_exit_code(self):
        with self.runner.isolated_filesystem():
            Path("small.yaml").write_text(SMALL_CONFIG, encoding="utf-8")
            with patch("src.ui.cli.run_experiment", side_effect=NonFiniteError("状态出现 NaN")):
                result = self.runner.invoke(app, ["run", "small.yaml", "-o", "out"])
            self.assertEqual(result.exit_code, 2)
            self.assertFalse(Path("out").exists())

    def test_solver_linalg_and_value_errors_exit_code(self):
        """测试求解器内部抛出的 LinAlgError 与 ValueError 都按数值失败返回 2"""
        errors = [np.linalg.LinAlgError("矩阵奇异"), ValueError("协方差出现负方差")]
        with self.runner.isolated_filesystem():
            Path("small.yaml").write_text(SMALL_CONFIG, encoding="utf-8")
            for error in errors:
                with patch("src.ui.cli.run_experiment", side_effect=error):
                    result = self.runner.invoke(app, ["run", "small.yaml", "-o", "out"])
                self.assertEqual(result.exit_code, 2, repr(error))
                self.assertNotIsInstance(result.exception, type(error))
                self.assertFalse(Path("out").exists())

    def test_grid_numerical_failure_exit_code(self):
        with self.runner.isolated_filesystem():
            for error in (np.linalg.LinAlgError("矩阵奇异"), NonFiniteError("状态出现 NaN")):
                with patch("src.ui.cli.run_grid", side_effect=error):
                    result = self.runner.invoke(app, ["grid", "lorenz_3dvar", "-o", "out", "-t", "1"])
                self.assertEqual(result.exit_code, 2, repr(error))
                self.assertFalse(Path("out").exists())

    def test_verify_exit_codes(self):
        """测试校验失败返回 3, 全部通过返回 0"""
        passing = [CheckResult("adjoint_identity", True, 1e-14, 1e-10)]
        failing = passing + [CheckResult("adjoint_gradient", False, 1e-3, 1e-6)]
        with self.runner.isolated_filesystem():
            with patch("src.ui.cli.run_all_checks", return_value=failing):
                self.assertEqual(self.runner.invoke(app, ["verify"]).exit_code, 3)
            with patch("src.ui.cli.run_all_checks", return_value=passing):
                self.assertEqual(self.runner.invoke(app, ["verify"]).exit_code, 0)

    def test_config_init_writes_loadable_file(self):
        with self.runner.isolated_filesystem():
            result = self.runner.invoke(app, ["config", "--init", "default.yaml", "--method", "ensrf"])
            self.assertEqual(result.exit_code, 0, result.output)
            cfg = ConfigManager("default.yaml").load_config()
            self.assertEqual(cfg.method, Method.ENSRF)

            shown = self.runner.invoke(app, ["config", "--show", "--config", "default.yaml"])
            self.assertEqual(shown.exit_code, 0)
            self.assertIn("ensrf", shown.output)

    def test_grid_unknown_protocol(self):
        result = self.runner.invoke(app, ["grid", "lorenz_unknown"])
        self.assertEqual(result.exit_code, 1)

    def test_grid_rejects_bad_thread_count(self):
        result = self.runner.invoke(app, ["grid", "lorenz_3dvar", "--threads", "0"])
        self.assertEqual(result.exit_code, 1)


class TestCsvWriter(unittest.TestCase):
    """CSV 输出测试"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)
        self.series = [
            RmseSeries(np.array([0.1, 0.2]), np.array([0.1, 1.0 / 3.0]), "run_bad_l2", "3dvar", "l2", 1.0, 7, "bad"),
            RmseSeries(np.array([0.1, 0.2]), np.array([0.5, 0.25]), "run_forecast", "3dvar", "none", 1.0, 7, "none"),
        ]

    def tearDown(self):
        self.tmp.cleanup()

    def test_header_and_exact_floats(self):
        """测试表头固定, 浮点数以 repr 写出可无损读回"""
        write_run_outputs(self.series, str(self.dir))
        lines = (self.dir / "run_bad_l2.csv").read_text(encoding="utf-8").splitlines()
        self.assertEqual(lines[0], ",".join(CSV_HEADER))
        rows = read_series_csv(str(self.dir / "run_bad_l2.csv"))
        self.assertEqual(float(rows[1]["rmse"]), 1.0 / 3.0)
        self.assertEqual(rows[0]["seed"], "7")
        self.assertEqual(rows[0]["data_quality"], "bad")

    def test_manifest(self):
        manifest = write_run_outputs(self.series, str(self.dir / "nested"), protocol="lorenz_3dvar")
        self.assertEqual(manifest.files["run_forecast"], "run_forecast.csv")
        self.assertEqual(manifest.seeds, [7])
        saved = json.loads((self.dir / "nested" / "manifest.json").read_text(encoding="utf-8"))
        self.assertEqual(saved["protocol"], "lorenz_3dvar")
        self.assertEqual(len(read_series_csv(str(self.dir / "nested" / "combined.csv"))), 4)

    def test_duplicate_labels_rejected(self):
        with self.assertRaises(ValueError):
            write_run_outputs([self.series[0], self.series[0]], str(self.dir))


if __name__ == '__main__':
    unittest.main()
