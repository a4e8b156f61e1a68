import math

import numpy as np
import pytest

from conftest import constant_history, linear_problem, power_history
from hadamard_delay.errors import DomainError, StepSizeError
from hadamard_delay.oracle import (
    de_integrate,
    direct_solve,
    hadamard_differintegral,
    to_log_coordinates,
    to_problem_coordinates,
)
from hadamard_delay.problems import SemilinearProblem
from hadamard_delay.special import gamma, ml_matrix, rgamma


class TestDeRule:
    def test_smooth(self):
        out = de_integrate(lambda v, dl, dh: np.sin(v), 0.0, math.pi)
        assert float(out) == pytest.approx(2.0, rel=1e-12)

    def test_both_endpoints_singular(self):
        out = de_integrate(lambda v, dl, dh: dl**-0.5 * dh**-0.25, 0.0, 1.0)
        from hadamard_delay.special import beta

        assert float(out) == pytest.approx(beta(0.5, 0.75), rel=1e-11)


class TestDifferintegral:
    def test_power_rule_derivative(self):
        base = 1.0 / 1.2
        for g, b in ((0.3, 0.8), (0.55, 1.3), (0.7, 0.9)):
            for t in (1.05, 1.4):
                got = hadamard_differintegral(
                    lambda x: x ** (b - 1.0), g, base, t, log_arg=True
                )
                x = math.log(t / base)
                want = gamma(b) * rgamma(b - g) * x ** (b - g - 1.0)
                assert float(got) == pytest.approx(want, rel=1e-8)

    def test_eigenfunction_annihilated(self):
        base = 1.0 / 1.2
        for b in (0.3, 0.6, 0.9):
            got = hadamard_differintegral(
                lambda x: x ** (b - 1.0), b, base, 1.3, log_arg=True
            )
            assert abs(float(got)) <= 1e-8

    def test_power_rule_integral(self):
        base, t = 1.0 / 1.2, 1.4
        got = hadamard_differintegral(lambda x: x**0.5, -0.4, base, t, log_arg=True)
        want = gamma(1.5) * rgamma(1.9) * math.log(t / base) ** 0.9
        assert float(got) == pytest.approx(want, rel=1e-10)

    def test_t_form_callable(self):
        base, t = 1.0 / 1.2, 1.4
        got = hadamard_differintegral(lambda s: math.log(s / base) ** 0.5, 0.3, base, t)
        want = gamma(1.5) * rgamma(1.2) * math.log(t / base) ** 0.2
        assert float(got) == pytest.approx(want, rel=1e-8)

    def test_weighted_kernel_integrates_to_plain(self):
        # I^(1-alpha) applied to the weighted kernel gives the unweighted one
        alpha = 0.6
        A0 = np.array([[0.4, 0.15], [-0.2, 0.3]])
        base, t = 1.0, 1.8

        def e_kernel(x):
            return x ** (alpha - 1.0) * ml_matrix(alpha, alpha, A0, x)

        got = hadamard_differintegral(
            e_kernel, -(1.0 - alpha), base, t, log_arg=True
        )
        want = ml_matrix(alpha, 1.0, A0, math.log(t / base))
        assert np.allclose(got, want, rtol=1e-8, atol=1e-10)

    def test_semigroup(self):
        base, t = 1.0, 2.2
        f = lambda x: np.sin(x) + 1.3

        def inner(x):
            if x < 1e-12:  # the fractional integral vanishes at the base point
                return 0.0
            return hadamard_differintegral(f, -0.35, base, base * math.exp(x), log_arg=True)

        one = hadamard_differintegral(inner, -0.4, base, t, log_arg=True)
        both = hadamard_differintegral(f, -0.75, base, t, log_arg=True)
        assert float(one) == pytest.approx(float(both), rel=1e-7)

    def test_derivative_inverts_integral(self):
        base, t = 1.0, 1.9
        f = lambda x: np.cos(1.3 * x) + 0.4

        def inner(x):
            if x < 1e-12:
                return 0.0
            return hadamard_differintegral(f, -0.45, base, base * math.exp(x), log_arg=True)

        got = hadamard_differintegral(inner, 0.45, base, t, log_arg=True)
        assert float(got) == pytest.approx(f(math.log(t)), rel=1e-6)

    def test_order_domain(self):
        with pytest.raises(DomainError):
            hadamard_differintegral(lambda x: x, 0.0, 1.0, 2.0)
        with pytest.raises(DomainError):
            hadamard_differintegral(lambda x: x, 1.2, 1.0, 2.0)


class TestLogCoordinates:
    def test_anchor_points(self):
        alpha, h = 0.5, 1.4
        a = np.array([0.3])
        prob = linear_problem(
            alpha, h, 2, np.zeros((1, 1)), np.zeros((1, 1)), a,
            power_history(a, alpha, h, 1),
        )
        lsp = to_log_coordinates(prob)
        assert lsp.lag == pytest.approx(math.log(h), rel=1e-15)
        assert lsp.horizon == pytest.approx(2 * math.log(h), rel=1e-15)

    def test_round_trip(self, rng):
        alpha, h, l = 0.45, 1.3, 2
        a = np.array([0.4, -0.2])
        forcing = lambda t: np.array([math.sin(math.log(t)), 0.7])
        prob = linear_problem(
            alpha, h, l, rng.normal(size=(2, 2)), rng.normal(size=(2, 2)), a,
            constant_history([0.3, 0.8], alpha, h), forcing=forcing,
        )
        back = to_problem_coordinates(to_log_coordinates(prob))
        assert np.allclose(back.spec.A0, prob.spec.A0)
        assert np.allclose(back.a, prob.a)
        for t in np.geomspace(1.0 / h * 1.01, 0.999, 40):
            assert np.allclose(back.history.phi(t), prob.history.phi(t), atol=1e-14)
            assert np.allclose(
                back.history.phi_frac_deriv(t), prob.history.phi_frac_deriv(t),
                atol=1e-14, rtol=1e-12,
            )
        for t in np.geomspace(1.001, prob.T, 60):
            assert np.allclose(back.forcing(t), prob.forcing(t), atol=1e-14)

    def test_semilinear_round_trip(self, rng):
        alpha, h = 0.55, 1.4
        lin = linear_problem(
            alpha, h, 2, np.zeros((2, 2)), np.eye(2) * 0.2, np.zeros(2),
            constant_history([0.2, -0.1], alpha, h),
        )
        prob = SemilinearProblem(
            linear=lin, rhs=lambda t, y: 0.1 * np.tanh(y), lipschitz=0.1,
            gamma_weight=0.1,
        )
        back = to_problem_coordinates(to_log_coordinates(prob))
        assert isinstance(back, SemilinearProblem)
        y = np.array([0.3, -0.6])
        for t in (1.2, 1.7):
            assert np.allclose(back.rhs(t, y), prob.rhs(t, y), atol=1e-14)


class TestDirectSolve:
    def test_free_power_solution_exact(self):
        alpha, h = 0.6, 1.4
        a = np.array([0.7])
        prob = linear_problem(
            alpha, h, 2, np.zeros((1, 1)), np.zeros((1, 1)), a,
            power_history(a, alpha, h, 1),
        )
        traj = direct_solve(to_log_coordinates(prob), 64)
        expected = a[0] / gamma(alpha) * np.log(traj.grid * h) ** (alpha - 1.0)
        assert np.abs(traj.values[:, 0] - expected).max() <= 1e-12

    def test_grid_avoids_breakpoints(self):
        alpha, h = 0.5, 1.3
        prob = linear_problem(
            alpha, h, 3, np.zeros((1, 1)), np.zeros((1, 1)), [0.0],
            power_history([0.0], alpha, h, 1),
        )
        traj = direct_solve(to_log_coordinates(prob), 16)
        for p in range(4):
            assert np.abs(np.log(traj.grid) - p * math.log(h)).min() > 1e-12

    def test_scalar_no_delay_convergence(self):
        mp = pytest.importorskip("mpmath")
        mp.mp.dps = 25
        alpha, h, lam = 0.6, 1.4, 0.8
        prob = linear_problem(
            alpha, h, 2, np.array([[lam]]), np.zeros((1, 1)), [0.0],
            power_history([0.0], alpha, h, 1),
            forcing=lambda t: np.array([math.cos(3.0 * math.log(t)) + 0.5]),
        )
        lsp = to_log_coordinates(prob)

        def closed(t):
            lt = mp.log(mp.mpf(t))

            def integrand(u):
                x = lt - u
                E = sum((lam * x**alpha) ** k / mp.gamma(k * alpha + alpha) for k in range(60))
                return x ** (alpha - 1) * E * (mp.cos(3 * u) + mp.mpf(1) / 2)

            return float(mp.quad(integrand, [0, lt]))

        errs = []
        for steps in (64, 128, 256):
            traj = direct_solve(lsp, steps)
            i = len(traj.grid) - 1
            errs.append(abs(traj.values[i, 0] - closed(traj.grid[i])))
        assert errs[1] < errs[0] and errs[2] < errs[1]
        # Richardson ratio: at least first order (halving the step at least
        # roughly halves the error)
        assert errs[0] / errs[1] >= 1.8 and errs[1] / errs[2] >= 1.8

    def test_step_floor(self):
        prob = linear_problem(
            0.5, 1.3, 1, np.zeros((1, 1)), np.zeros((1, 1)), [0.0],
            power_history([0.0], 0.5, 1.3, 1),
        )
        with pytest.raises(StepSizeError):
            direct_solve(to_log_coordinates(prob), 4)
