import numpy as np
import pytest

from sparsegold.objective import (
    CompositeObjective,
    EvalCounter,
    L1,
    descent_measure,
    direction,
    shrinkage,
)
from sparsegold.operators import EnsembleSpec, LinearOperator, make_operator


def one_d_objective():
    # A = [1], b = [1], mu = 0.25: minimizer at x = 0.75
    op = LinearOperator.from_dense(np.array([[1.0]]))
    return CompositeObjective(op, np.array([1.0]), 0.25)


def brute_shrink(x, theta):
    # grid argmin of theta*|y| + 0.5*(x-y)^2, refined to 1e-6 spacing
    lo, hi = min(0.0, x) - 1e-3, max(0.0, x) + 1e-3
    coarse = np.linspace(lo, hi, max(int((hi - lo) * 1000) + 2, 8))
    best = coarse[np.argmin(theta * np.abs(coarse) + 0.5 * (x - coarse) ** 2)]
    fine = best + np.arange(-2000, 2001) * 1e-6
    return float(fine[np.argmin(theta * np.abs(fine) + 0.5 * (x - fine) ** 2)])


class TestShrinkage:
    def test_zero_threshold_is_identity(self):
        x = np.array([1.5, -2.0, 0.0])
        assert np.array_equal(shrinkage(x, 0.0), x)

    def test_closed_form(self):
        got = shrinkage(np.array([2.0, -0.3, 0.5]), 0.5)
        assert np.allclose(got, [1.5, 0.0, 0.0])

    def test_negative_threshold_rejected(self):
        with pytest.raises(ValueError):
            shrinkage(np.array([1.0]), -0.1)

    def test_matches_brute_force_grid(self):
        rng = np.random.Generator(np.random.PCG64(7))
        for _ in range(50):
            x = float(rng.standard_normal() * 2)
            theta = float(rng.uniform(0, 1.5))
            got = float(shrinkage(np.array([x]), theta)[0])
            assert abs(got - brute_shrink(x, theta)) <= 1e-6


class TestEvaluate:
    def test_zero_problem(self):
        op = LinearOperator.from_dense(np.eye(2))
        obj = CompositeObjective(op, np.zeros(2), 1.0)
        total, f, residual = obj.evaluate(np.zeros(2))
        assert total == 0.0 and f == 0.0
        assert np.array_equal(residual, np.zeros(2))

    def test_identity_case(self):
        op = LinearOperator.from_dense(np.eye(2))
        obj = CompositeObjective(op, np.zeros(2), 1.0)
        total, f, _ = obj.evaluate(np.array([1.0, 0.0]))
        assert f == pytest.approx(0.5)
        assert total == pytest.approx(1.5)

    def test_one_dimensional_value(self):
        obj = one_d_objective()
        total, f, residual = obj.evaluate(np.array([0.75]))
        # 0.5*(0.25)^2 + 0.25*0.75
        assert total == pytest.approx(0.21875)
        assert f == pytest.approx(0.03125)
        assert residual[0] == pytest.approx(-0.25)

    def test_counter_increments_once_per_call(self):
        obj = one_d_objective()
        counter = EvalCounter()
        for k in range(5):
            obj.evaluate(np.array([0.1 * k]), counter)
        assert counter.n_fun == 5
        obj.value_with_residual(np.array([0.0]), np.array([-1.0]), counter)
        assert counter.n_fun == 6

    def test_dimension_mismatch(self):
        obj = one_d_objective()
        with pytest.raises(ValueError):
            obj.evaluate(np.zeros(2))

    def test_bad_mu_and_b(self):
        op = LinearOperator.from_dense(np.eye(2))
        with pytest.raises(ValueError):
            CompositeObjective(op, np.zeros(2), 0.0)
        with pytest.raises(ValueError):
            CompositeObjective(op, np.zeros(3), 1.0)


class TestGradient:
    def test_zero_residual(self):
        obj = one_d_objective()
        assert np.array_equal(obj.grad_f(np.zeros(1)), np.zeros(1))

    def test_identity_case(self):
        op = LinearOperator.from_dense(np.eye(2))
        obj = CompositeObjective(op, np.zeros(2), 1.0)
        _, _, residual = obj.evaluate(np.array([1.0, 0.0]))
        assert np.allclose(obj.grad_f(residual), [1.0, 0.0])

    def test_matches_finite_differences(self):
        op = make_operator(EnsembleSpec("gaussian", 5, 8, seed=42))
        obj = CompositeObjective(op, np.arange(5.0) / 3.0, 1.0)
        rng = np.random.Generator(np.random.PCG64(1))
        x = rng.standard_normal(8)
        _, _, residual = obj.evaluate(x)
        grad = obj.grad_f(residual)

        def f_of(z):
            _, f, _ = obj.evaluate(z)
            return f

        for i in range(8):
            h = 1e-6 * (1 + abs(x[i]))
            e = np.zeros(8)
            e[i] = h
            fd = (f_of(x + e) - f_of(x - e)) / (2 * h)
            assert grad[i] == pytest.approx(fd, rel=1e-5, abs=1e-8)

    def test_grad_counter(self):
        obj = one_d_objective()
        counter = EvalCounter()
        obj.grad_f(np.array([1.0]), counter)
        assert counter.n_grad == 1 and counter.n_fun == 0


class TestDirection:
    def test_stationary_point_gives_zero(self):
        obj = one_d_objective()
        x = np.array([0.75])
        _, _, residual = obj.evaluate(x)
        g = obj.grad_f(residual)
        d = direction(obj, x, g, tau=1.0)
        # prox(0.75 + 0.25, 0.25) = shrink(1, 0.25) = 0.75
        assert np.allclose(d, 0.0, atol=1e-15)

    def test_identity_case(self):
        op = LinearOperator.from_dense(np.eye(2))
        obj = CompositeObjective(op, np.zeros(2), 1.0)
        x = np.array([1.0, 0.0])
        _, _, residual = obj.evaluate(x)
        g = obj.grad_f(residual)
        assert np.allclose(direction(obj, x, g, 1.0), [-1.0, 0.0])

    def test_origin_of_zero_problem(self):
        op = LinearOperator.from_dense(np.eye(2))
        obj = CompositeObjective(op, np.zeros(2), 1.0)
        d = direction(obj, np.zeros(2), np.zeros(2), 1.0)
        assert np.array_equal(d, np.zeros(2))

    def test_requires_positive_tau(self):
        obj = one_d_objective()
        with pytest.raises(ValueError):
            direction(obj, np.zeros(1), np.zeros(1), 0.0)


class TestDescentMeasure:
    def test_zero_direction(self):
        op = LinearOperator.from_dense(np.eye(2))
        obj = CompositeObjective(op, np.zeros(2), 1.0)
        assert descent_measure(obj, np.ones(2), np.zeros(2), np.ones(2)) == 0.0

    def test_identity_case_value(self):
        op = LinearOperator.from_dense(np.eye(2))
        obj = CompositeObjective(op, np.zeros(2), 1.0)
        x = np.array([1.0, 0.0])
        d = np.array([-1.0, 0.0])
        g = np.array([1.0, 0.0])
        delta = descent_measure(obj, x, d, g)
        assert delta == pytest.approx(-2.0)
        assert delta <= -np.dot(d, d) / (2 * 1.0)

    def test_descent_bound_random_instances(self):
        # delta <= -||d||^2 / (2 tau) over random points and tau in bounds
        rng = np.random.Generator(np.random.PCG64(5))
        op = make_operator(EnsembleSpec("gaussian", 6, 12, seed=9))
        obj = CompositeObjective(op, rng.standard_normal(6), 2.0 ** -8)
        for _ in range(100):
            x = rng.standard_normal(12) * 2
            tau = float(10.0 ** rng.uniform(-4, 4))
            _, _, residual = obj.evaluate(x)
            g = obj.grad_f(residual)
            d = direction(obj, x, g, tau)
            delta = descent_measure(obj, x, d, g)
            bound = -float(d @ d) / (2 * tau)
            assert delta <= bound + 1e-9 * (1 + abs(bound))
            if np.linalg.norm(d) > 0:
                # quartic consequence with tau_max = 1e4
                assert float(d @ d) ** 2 / delta ** 2 <= 4 * (1e4) ** 2 * (1 + 1e-9)


class TestProxInequalities:
    def test_l1_value_convexity(self):
        reg = L1()
        rng = np.random.Generator(np.random.PCG64(14))
        for _ in range(100):
            x = rng.standard_normal(10) * 3
            y = rng.standard_normal(10) * 3
            mid = reg.value(0.5 * x + 0.5 * y)
            assert mid <= 0.5 * reg.value(x) + 0.5 * reg.value(y) + 1e-12

    def test_p1_p2_p3(self):
        rng = np.random.Generator(np.random.PCG64(15))
        for _ in range(1000):
            n = 12
            x = rng.standard_normal(n) * 3
            y = rng.standard_normal(n) * 3
            theta = float(rng.uniform(1e-3, 2.0))
            scale = 1.0 + np.linalg.norm(x) + np.linalg.norm(y)
            px, py = shrinkage(x, theta), shrinkage(y, theta)
            p1 = float((px - x) @ (y - px)) + theta * (np.abs(y).sum() - np.abs(px).sum())
            assert p1 >= -1e-10 * scale
            p2 = float((px - py) @ (x - y))
            assert p2 >= float((px - py) @ (px - py)) - 1e-10 * scale
            assert np.linalg.norm(px - py) <= np.linalg.norm(x - y) + 1e-12
