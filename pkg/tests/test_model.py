import unittest

import numpy as np

from src.exceptions import DimensionError, NonFiniteError
from src.model import (
    LinearModel,
    Lorenz96Model,
    ModelConfig,
    StateVector,
    Trajectory,
    adjoint,
    forecast,
    integrate,
    lorenz96_rhs,
    observed_order,
    step_sizes,
    tangent_linear,
)


class TestLorenz96(unittest.TestCase):
    """Lorenz-96 右端项测试"""

    def setUp(self):
        self.cfg = ModelConfig()
        self.model = Lorenz96Model(self.cfg)

    def test_rhs_at_zero_is_forcing(self):
        """测试零状态的右端项等于外强迫"""
        np.testing.assert_allclose(lorenz96_rhs(np.zeros(40), self.cfg), np.full(40, 8.0))

    def test_rhs_vanishes_at_fixed_point(self):
        """测试平凡不动点处右端项为零"""
        np.testing.assert_allclose(self.model.rhs(self.model.fixed_point()), np.zeros(40), atol=1e-12)

    def test_rhs_hand_computed(self):
        """测试小维数下手算的右端项"""
        cfg = ModelConfig(n=4, forcing=0.0)
        x = np.array([1.0, 2.0, 3.0, 4.0])
        # dx_0 = x_3 (x_1 - x_2) - x_0
        expected = np.array([
            4.0 * (2.0 - 3.0) - 1.0,
            1.0 * (3.0 - 4.0) - 2.0,
            2.0 * (4.0 - 1.0) - 3.0,
            3.0 * (1.0 - 2.0) - 4.0,
        ])
        np.testing.assert_allclose(lorenz96_rhs(x, cfg), expected)

    def test_rhs_dimension_mismatch(self):
        with self.assertRaises(DimensionError):
            lorenz96_rhs(np.zeros(5), self.cfg)

    def test_jacobian_matches_jvp(self):
        """测试稠密雅可比矩阵与 jvp/vjp 一致"""
        rng = np.random.default_rng(0)
        x = rng.standard_normal(40)
        dx = rng.standard_normal(40)
        jac = self.model.jacobian(x)
        np.testing.assert_allclose(jac @ dx, self.model.jvp(x, dx), atol=1e-12)
        np.testing.assert_allclose(jac.T @ dx, self.model.vjp(x, dx), atol=1e-12)

    def test_rhs_acts_on_ensemble_matrix(self):
        """测试右端项按列作用于集合矩阵"""
        rng = np.random.default_rng(1)
        members = rng.standard_normal((40, 3))
        out = self.model.rhs(members)
        for j in range(3):
            np.testing.assert_allclose(out[:, j], self.model.rhs(members[:, j]))


class TestIntegrator(unittest.TestCase):
    """RK4 积分器测试"""

    def test_step_sizes_shortened_last_step(self):
        """测试最后一步缩短以落在终点"""
        steps = step_sizes(0.0, 0.25, 0.1)
        self.assertEqual(len(steps), 3)
        self.assertAlmostEqual(steps[-1], 0.05)
        self.assertAlmostEqual(sum(steps), 0.25)

    def test_step_sizes_rejects_backward(self):
        with self.assertRaises(ValueError):
            step_sizes(1.0, 0.5, 0.1)

    def test_fixed_point_is_preserved(self):
        """测试不动点在积分中保持不变"""
        model = Lorenz96Model()
        traj = integrate(StateVector(model.fixed_point(), 0.0), 2.0, model)
        np.testing.assert_allclose(traj.final.values, model.fixed_point(), atol=1e-12)
        self.assertAlmostEqual(traj.final.time, 2.0)

    def test_linear_decay(self):
        """测试 dx/dt = -x 积分到 t=1 得到 exp(-1)"""
        model = LinearModel(-np.eye(1), dt=0.01)
        x1 = forecast(StateVector(np.array([1.0]), 0.0), 1.0, model)
        self.assertAlmostEqual(float(x1.values[0]), np.exp(-1.0), places=9)

    def test_trajectory_contains_every_step(self):
        model = Lorenz96Model()
        traj = integrate(StateVector(np.linspace(-2, 2, 40), 0.0), 0.1, model)
        self.assertEqual(len(traj), 21)
        np.testing.assert_allclose(traj.at(0.05).values, traj[10].values)

    def test_observed_order_is_four(self):
        """测试经验收敛阶接近 4"""
        order = observed_order(LinearModel(-np.eye(1), 0.1), StateVector(np.array([1.0]), 0.0), 1.0, 0.1)
        self.assertGreater(order, 3.7)
        self.assertLess(order, 4.3)

    def test_divergence_raises(self):
        """测试发散的积分抛出 NonFiniteError"""
        model = LinearModel(np.array([[800.0]]), dt=0.5)
        with self.assertRaises(NonFiniteError):
            integrate(StateVector(np.array([1e300]), 0.0), 1.0, model)


class TestTangentAndAdjoint(unittest.TestCase):
    """切线性与伴随模型测试"""

    def setUp(self):
        self.model = Lorenz96Model()
        self.traj = integrate(StateVector(np.linspace(-2.0, 2.0, 40), 0.0), 0.6, self.model)
        self.rng = np.random.default_rng(42)

    def test_adjoint_identity(self):
        """测试 0.6 时间单位窗口上 100 对随机向量的 <M u, v> = <u, M^T v>"""
        for _ in range(100):
            u = self.rng.standard_normal(40)
            v = self.rng.standard_normal(40)
            lhs = tangent_linear(self.traj, u, self.model) @ v
            rhs = u @ adjoint(self.traj, v, self.model)
            self.assertLess(abs(lhs - rhs) / (np.linalg.norm(u) * np.linalg.norm(v)), 1e-10)

    def test_tangent_matches_finite_difference(self):
        """测试切线性模型与非线性积分的中心差分一致"""
        x0 = self.traj.initial
        u = self.rng.standard_normal(40)
        eps = 1e-6
        plus = forecast(StateVector(x0.values + eps * u, 0.0), 0.6, self.model).values
        minus = forecast(StateVector(x0.values - eps * u, 0.0), 0.6, self.model).values
        fd = (plus - minus) / (2 * eps)
        tl = tangent_linear(self.traj, u, self.model)
        self.assertLess(np.linalg.norm(fd - tl) / np.linalg.norm(tl), 1e-6)

    def test_linear_single_step_adjoint_is_transpose(self):
        """测试线性模型单步伴随等于 RK4 传播矩阵的转置"""
        A = self.rng.standard_normal((3, 3))
        model = LinearModel(A, dt=0.05)
        traj = integrate(StateVector(np.ones(3), 0.0), 0.05, model)
        v = self.rng.standard_normal(3)
        np.testing.assert_allclose(adjoint(traj, v, model), model.step_matrix(0.05).T @ v, atol=1e-13)
        np.testing.assert_allclose(tangent_linear(traj, v, model), model.step_matrix(0.05) @ v, atol=1e-13)

    def test_tangent_at_fixed_point_matches_matrix_exponential(self):
        """测试不动点处切线性模型等于 exp(tJ)"""
        x_star = self.model.fixed_point()
        traj = integrate(StateVector(x_star, 0.0), 0.5, self.model)
        exact = LinearModel(self.model.jacobian(x_star)).propagator(0.5)
        for _ in range(5):
            u = self.rng.standard_normal(40)
            tl = tangent_linear(traj, u, self.model)
            expected = exact @ u
            self.assertLess(np.linalg.norm(tl - expected) / np.linalg.norm(expected), 1e-4)

    def test_linear_propagator(self):
        """测试线性模型的 RK4 积分与切线性模型都收敛到 exp(tA)"""
        A = 0.5 * self.rng.standard_normal((4, 4))
        model = LinearModel(A, dt=0.01)
        exact = model.propagator(1.0)
        x0 = self.rng.standard_normal(4)
        traj = integrate(StateVector(x0, 0.0), 1.0, model)
        np.testing.assert_allclose(traj.final.values, exact @ x0, atol=1e-6)
        u = self.rng.standard_normal(4)
        np.testing.assert_allclose(tangent_linear(traj, u, model), exact @ u, atol=1e-6)
        np.testing.assert_allclose(model.propagator(0.0), np.eye(4))

    def test_perturbation_dimension_checked(self):
        with self.assertRaises(DimensionError):
            tangent_linear(self.traj, np.zeros(3), self.model)


class TestStateTypes(unittest.TestCase):
    """状态与轨迹类型测试"""

    def test_state_is_read_only(self):
        state = StateVector(np.zeros(3), 0.0)
        with self.assertRaises(ValueError):
            state.values[0] = 1.0

    def test_state_rejects_nan(self):
        with self.assertRaises(NonFiniteError):
            StateVector(np.array([0.0, np.nan]), 0.0)

    def test_trajectory_requires_increasing_times(self):
        with self.assertRaises(ValueError):
            Trajectory(np.array([0.0, 0.0]), np.zeros((2, 3)))

    def test_trajectory_lookup_and_concat(self):
        """测试按时刻查找和首尾拼接"""
        first = Trajectory(np.array([0.0, 0.1]), np.array([[0.0], [1.0]]))
        second = Trajectory(np.array([0.1, 0.2]), np.array([[1.0], [2.0]]))
        joined = first.concat(second)
        self.assertEqual(len(joined), 3)
        self.assertEqual(float(joined.at(0.2).values[0]), 2.0)
        with self.assertRaises(KeyError):
            joined.at(0.15)

    def test_model_config_minimum_dimension(self):
        with self.assertRaises(ValueError):
            ModelConfig(n=3)


if __name__ == '__main__':
    unittest.main()
