import math

import numpy as np
import pytest

from sparsegold.linesearch import (
    NonmonotoneState,
    goldstein_quotients,
    monotone_accept,
    search_alpha,
    semi_monotone_accept,
)
from sparsegold.objective import CompositeObjective, EvalCounter
from sparsegold.operators import LinearOperator
from sparsegold.solvers import SolverConfig


class TestWindow:
    def test_push_below_capacity(self):
        st = NonmonotoneState(capacity=3)
        for v in (5.0, 7.0, 6.0):
            st.push(v)
        assert list(st.window) == [5.0, 7.0, 6.0]
        assert st.window_max() == 7.0

    def test_fifo_eviction(self):
        st = NonmonotoneState(capacity=3)
        for v in (5.0, 7.0, 6.0, 4.0):
            st.push(v)
        assert list(st.window) == [7.0, 6.0, 4.0]

    def test_capacity_one(self):
        st = NonmonotoneState(capacity=1)
        for v in (5.0, 9.0, 2.0):
            st.push(v)
            assert list(st.window) == [v]

    def test_max_matches_linear_scan(self):
        rng = np.random.Generator(np.random.PCG64(3))
        st = NonmonotoneState(capacity=10)
        values = list(rng.standard_normal(10) * 4)
        for v in values:
            st.push(v)
        assert st.window_max() == max(values)

    def test_rejects_nonfinite_and_empty(self):
        st = NonmonotoneState(capacity=2)
        with pytest.raises(ValueError):
            st.push(float("nan"))
        with pytest.raises(ValueError):
            st.window_max()

    def test_bad_capacity_and_eta_bounds(self):
        with pytest.raises(ValueError):
            NonmonotoneState(capacity=0)
        with pytest.raises(ValueError):
            NonmonotoneState(capacity=2, eta_min=0.7, eta_max=0.2)


class TestReferenceValue:
    def test_eta_zero_is_monotone(self):
        st = NonmonotoneState(capacity=5, eta0=0.0)
        st.push(9.0)
        assert st.reference_value(5.0) == 5.0

    def test_eta_one_is_window_max(self):
        st = NonmonotoneState(capacity=5, eta0=1.0)
        st.push(7.0)
        st.push(5.0)
        assert st.reference_value(5.0) == 7.0

    def test_convex_combination(self):
        st = NonmonotoneState(capacity=5, eta0=0.5)
        st.push(7.0)
        assert st.reference_value(5.0) == pytest.approx(6.0)

    def test_reference_never_below_current(self):
        rng = np.random.Generator(np.random.PCG64(4))
        st = NonmonotoneState(capacity=4, eta0=0.37)
        current = 10.0
        for _ in range(20):
            st.push(current)
            assert st.reference_value(current) >= current
            current -= float(rng.uniform(0.0, 1.0))


class TestEtaUpdate:
    def test_small_gradient_decay(self):
        st = NonmonotoneState(capacity=3, eta0=0.5)
        st.update_eta(0.005)
        assert st.eta == pytest.approx(0.5 * 2 / 3 + 0.01)

    def test_large_gradient_holds_at_half(self):
        st = NonmonotoneState(capacity=3, eta0=0.5)
        st.update_eta(1.0)
        assert st.eta == 0.5

    def test_decay_fixed_point(self):
        st = NonmonotoneState(capacity=3, eta0=0.5)
        for _ in range(200):
            st.update_eta(1e-3)
        assert st.eta == pytest.approx(0.03, rel=1e-9)

    def test_clamped_to_bounds(self):
        st = NonmonotoneState(capacity=3, eta0=0.5, eta_min=0.0, eta_max=0.0)
        assert st.eta == 0.0
        st.update_eta(5.0)
        assert st.eta == 0.0


class TestQuotients:
    def test_exact_model_decrease(self):
        f_k, alpha, delta = 10.0, 0.5, -2.0
        nu, _ = goldstein_quotients(f_k, f_k + alpha * delta, f_k, alpha, delta)
        assert nu == pytest.approx(1.0)

    def test_monotone_reference_collapses(self):
        nu, lam = goldstein_quotients(10.0, 9.5, 10.0, 1.0, -1.0)
        assert nu == lam

    def test_hand_example(self):
        nu, lam = goldstein_quotients(10.0, 9.0, 10.5, 1.0, -2.0)
        assert nu == pytest.approx(0.5)
        assert lam == pytest.approx(0.75)

    def test_lambda_at_least_nu(self):
        rng = np.random.Generator(np.random.PCG64(9))
        for _ in range(100):
            f_k = float(rng.standard_normal())
            f_next = f_k - float(rng.uniform(0, 2))
            r = f_k + float(rng.uniform(0, 3))
            alpha = float(rng.uniform(0.01, 1))
            delta = -float(rng.uniform(0.1, 5))
            nu, lam = goldstein_quotients(f_k, f_next, r, alpha, delta)
            assert lam >= nu

    def test_preconditions(self):
        with pytest.raises(ValueError):
            goldstein_quotients(1.0, 0.5, 1.0, 0.0, -1.0)
        with pytest.raises(ValueError):
            goldstein_quotients(1.0, 0.5, 1.0, 1.0, 0.5)


class TestAcceptRules:
    def test_semi_monotone_hand_example(self):
        assert semi_monotone_accept(0.5, 0.75, 1e-10)

    def test_semi_monotone_rejects_increase(self):
        assert not semi_monotone_accept(-0.1, 0.4, 1e-10)

    def test_semi_monotone_rejects_lambda_one(self):
        assert not semi_monotone_accept(0.8, 1.0, 1e-10)

    def test_monotone_rule(self):
        assert monotone_accept(0.5, 1e-10)
        assert not monotone_accept(1.0, 1e-10)
        assert not monotone_accept(0.0, 1e-10)

    def test_acceptance_implies_strict_decrease(self):
        # nu > 0 is forced whenever the product clears a positive theta
        rng = np.random.Generator(np.random.PCG64(11))
        for _ in range(200):
            nu = float(rng.uniform(-1, 2))
            lam = float(rng.uniform(-1, 3))
            if semi_monotone_accept(nu, lam, 1e-10):
                assert nu > 0


def quadratic_1d(a, b, mu=1e-9):
    op = LinearOperator.from_dense(np.array([[a]]))
    return CompositeObjective(op, np.array([b]), mu)


class TestSearchAlpha:
    def test_full_step_accepted_zero_backtracks(self):
        # A=[2], b=[1], x=0, tau=0.25: d=0.5, F(alpha) = (alpha-1)^2/2,
        # nu(1) = 0.5: inside the bracket, product 0.25 >> theta.
        obj = quadratic_1d(2.0, 1.0)
        cfg = SolverConfig()
        x = np.zeros(1)
        f_k, _, residual = obj.evaluate(x)
        g = obj.grad_f(residual)
        d = np.array([0.5])
        delta = float(d @ g) + obj.mu * (abs(d[0]) - 0.0)
        out = search_alpha(obj, x, d, delta, f_k, f_k, cfg)
        assert out.accepted and not out.degraded
        assert out.alpha == 1.0
        assert out.backtracks == 0
        assert out.f_next < f_k

    def test_one_backtrack_with_large_theta(self):
        # overshooting step: F rises at alpha=1, decreases at alpha=0.5 with
        # product 0.21 over theta=0.15
        obj = quadratic_1d(2.0, 1.0)
        cfg = SolverConfig(theta=0.15)
        x = np.zeros(1)
        f_k, _, residual = obj.evaluate(x)
        g = obj.grad_f(residual)
        d = np.array([1.4])
        delta = float(d @ g) + obj.mu * abs(d[0])
        out = search_alpha(obj, x, d, delta, f_k, f_k, cfg)
        assert out.accepted and not out.degraded
        assert out.alpha == pytest.approx(0.5)
        assert out.backtracks == 1
        assert out.nu * abs(out.nu - 1.0) >= cfg.theta

    def test_zero_direction_rejected(self):
        obj = quadratic_1d(1.0, 1.0)
        with pytest.raises(ValueError):
            search_alpha(obj, np.zeros(1), np.zeros(1), -1.0, 1.0, 1.0, SolverConfig())

    def test_nonnegative_delta_rejected(self):
        obj = quadratic_1d(1.0, 1.0)
        with pytest.raises(ValueError):
            search_alpha(obj, np.zeros(1), np.ones(1), 0.0, 1.0, 1.0, SolverConfig())

    def test_each_trial_counts_one_evaluation(self):
        obj = quadratic_1d(2.0, 1.0)
        cfg = SolverConfig(theta=0.15)
        counter = EvalCounter()
        x = np.zeros(1)
        f_k, _, residual = obj.evaluate(x)
        g = obj.grad_f(residual)
        d = np.array([1.4])
        delta = float(d @ g) + obj.mu * abs(d[0])
        out = search_alpha(obj, x, d, delta, f_k, f_k, cfg, counter)
        assert counter.n_fun == out.backtracks + 1 == 2

    def test_exhaustion_mid_run_fails_rather_than_creeping(self):
        # theta too large for any trial, decreases well above stopping
        # scale: the search reports failure instead of a degraded crawl
        obj = quadratic_1d(2.0, 1.0)
        cfg = SolverConfig(theta=10.0, max_backtracks=6)
        x = np.zeros(1)
        f_k, _, residual = obj.evaluate(x)
        g = obj.grad_f(residual)
        d = np.array([0.5])
        delta = float(d @ g) + obj.mu * abs(d[0])
        out = search_alpha(obj, x, d, delta, f_k, f_k, cfg)
        assert not out.accepted

    def test_exhaustion_at_stopping_scale_degrades_gracefully(self):
        # same rejection pattern, but with ftol so loose that the best
        # decrease counts as stagnation: the trial is returned flagged
        obj = quadratic_1d(2.0, 1.0)
        cfg = SolverConfig(theta=10.0, max_backtracks=6, ftol=1.0)
        x = np.zeros(1)
        f_k, _, residual = obj.evaluate(x)
        g = obj.grad_f(residual)
        d = np.array([0.5])
        delta = float(d @ g) + obj.mu * abs(d[0])
        out = search_alpha(obj, x, d, delta, f_k, f_k, cfg)
        assert out.accepted and out.degraded
        assert out.f_next < f_k

    def test_failure_when_no_decrease_exists(self):
        # lie about delta for an ascent ray: every trial increases F
        obj = quadratic_1d(1.0, -1.0)
        cfg = SolverConfig(max_backtracks=5)
        x = np.zeros(1)
        f_k, _, residual = obj.evaluate(x)
        out = search_alpha(obj, x, np.array([1.0]), -1.0, f_k, f_k, cfg)
        assert not out.accepted
        assert math.isinf(out.f_next)

    def test_relaxed_reference_accepts_marginal_step(self):
        # nu(1) tiny: the monotone gate backtracks, a generous reference
        # accepts the full step
        obj = quadratic_1d(2.0, 1.0)
        cfg = SolverConfig()
        x = np.zeros(1)
        f_k, _, residual = obj.evaluate(x)
        g = obj.grad_f(residual)
        d = np.array([0.98])  # F(alpha=1) barely below F(0)
        delta = float(d @ g) + obj.mu * abs(d[0])
        mono = search_alpha(obj, x, d, delta, f_k, f_k, cfg)
        relaxed = search_alpha(obj, x, d, delta, f_k + 0.4, f_k, cfg)
        assert relaxed.accepted and relaxed.alpha == 1.0 and relaxed.backtracks == 0
        assert mono.backtracks > 0
