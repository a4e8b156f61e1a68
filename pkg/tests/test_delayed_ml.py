import math

import numpy as np
import pytest

from conftest import commuting_pair
from hadamard_delay.delayed_ml import (
    DelayedMLSpec,
    delay_index,
    delayed_ml,
    norm_bound,
    pure_delay_ml,
    scalar_delay_series,
    y_k_commuting,
    y_k_general,
)
from hadamard_delay.errors import DomainError, NotCommutingError, SupportError
from hadamard_delay.logquad import QuadraturePolicy
from hadamard_delay.oracle import hadamard_differintegral
from hadamard_delay.special import e_ml_matrix, gamma, ml_matrix_at, rgamma

# worked 2x2 pure-delay table at t = 1.1 (branch 0 < t <= 1.2):
# I (ln 1.32)^(-0.7)/Gamma(0.3) + A1 (ln 1.1)^(-0.4)/Gamma(0.6), 20-digit entries
EXAMPLE_T11 = np.array(
    [
        [4.2586647473124104075, 1.7194657018983924259],
        [5.1583971056951772776, 9.4170618530075876851],
    ]
)


def small_spec(alpha=0.4, beta=0.4, h=1.3, A0=None, A1=None, **kw):
    A0 = np.array([[0.3, 0.1], [-0.2, 0.25]]) if A0 is None else A0
    A1 = np.array([[0.2, -0.1], [0.15, 0.3]]) if A1 is None else A1
    return DelayedMLSpec(alpha=alpha, beta=beta, h=h, A0=A0, A1=A1, **kw)


class TestDelayIndex:
    def test_boundary_belongs_left(self):
        assert delay_index(1.2 * 1.0, 1.0, 1.2) == 0  # t = s h
        assert delay_index(1.2**2, 1.0, 1.2) == 1

    def test_below_diagonal(self):
        assert delay_index(0.9, 1.0, 1.2) == -1
        assert delay_index(1.0, 1.0, 1.2) == -1

    def test_direct_arithmetic(self):
        assert delay_index(1.3, 1.0, 1.2) == 1  # 1.2 < 1.3 <= 1.44

    def test_invariant_bracket(self, rng):
        for _ in range(200):
            s = rng.uniform(0.3, 2.0)
            h = rng.uniform(1.05, 2.0)
            t = s * h ** rng.uniform(0.0, 6.0)
            k = delay_index(t, s, h)
            if k >= 0:
                assert s * h**k < t * (1 + 1e-12) and t <= s * h ** (k + 1) * (1 + 1e-12)


class TestPureDelay:
    def test_zero_below_support(self):
        spec = small_spec()
        assert np.all(pure_delay_ml(spec, math.log(1.0 / spec.h) - 0.2) == 0.0)
        assert np.all(pure_delay_ml(spec, math.log(1.0 / spec.h)) == 0.0)

    def test_first_branch_is_weighted_identity(self):
        spec = small_spec()
        lnt = math.log(0.95)
        out = pure_delay_ml(spec, lnt)
        expected = np.eye(2) * (lnt + spec.log_h) ** (spec.beta - 1.0) * rgamma(spec.beta)
        assert np.allclose(out, expected, rtol=1e-14)

    def test_worked_example_branch_value(self):
        A1 = np.array([[2.0, 1.0], [3.0, 5.0]])
        spec = DelayedMLSpec(alpha=0.3, beta=0.3, h=1.2, A0=np.zeros((2, 2)), A1=A1)
        out = pure_delay_ml(spec, math.log(1.1))
        assert np.allclose(out, EXAMPLE_T11, rtol=1e-13)


class TestBranchTerms:
    def test_level_zero_is_weighted_ml(self):
        spec = small_spec()
        t, s = 1.21, 1.0
        out = y_k_general(spec, 0, t, s)
        expected = e_ml_matrix(spec.alpha, spec.beta, spec.A0, math.log(t / s))
        assert np.allclose(out, expected, rtol=1e-13)

    def test_level_one_without_drift(self):
        spec = small_spec(A0=np.zeros((2, 2)))
        t, s = 1.8, 1.0
        w = math.log(t / (s * spec.h))
        expected = spec.A1 * w ** (spec.alpha + spec.beta - 1.0) * rgamma(
            spec.alpha + spec.beta
        )
        assert np.allclose(y_k_general(spec, 1, t, s), expected, rtol=1e-9)

    def test_commuting_cross_check_level_two(self, rng):
        A0, A1 = commuting_pair(rng)
        spec = DelayedMLSpec(alpha=0.45, beta=0.45, h=1.3, A0=A0, A1=A1)
        t = spec.h**2 * 1.2
        yg = y_k_general(spec, 2, t, 1.0)
        yc = y_k_commuting(spec, 2, t, 1.0)
        assert np.linalg.norm(yg - yc) <= 1e-6 * np.linalg.norm(yc)

    def test_commuting_level_zero_matches_general(self):
        spec = small_spec(A1=np.zeros((2, 2)))  # commutes with anything
        t = 1.2
        assert np.allclose(
            y_k_commuting(spec, 0, t, 1.0), y_k_general(spec, 0, t, 1.0), rtol=1e-12
        )

    def test_commuting_pure_delay_powers(self):
        A1 = np.array([[0.4, 0.2], [-0.3, 0.5]])
        spec = DelayedMLSpec(alpha=0.35, beta=0.6, h=1.25, A0=np.zeros((2, 2)), A1=A1)
        for k in (1, 2, 3):
            t = spec.h**k * 1.15
            w = math.log(t) - k * spec.log_h
            expected = (
                np.linalg.matrix_power(A1, k)
                * w ** (k * spec.alpha + spec.beta - 1.0)
                * rgamma(k * spec.alpha + spec.beta)
            )
            assert np.allclose(y_k_commuting(spec, k, t, 1.0), expected, rtol=1e-12)

    def test_scalar_double_series_reference(self):
        mp = pytest.importorskip("mpmath")
        mp.mp.dps = 40
        a0, a1, alpha, beta_ = 0.6, -0.45, 0.4, 0.7
        spec = DelayedMLSpec(
            alpha=alpha, beta=beta_, h=1.3, A0=np.array([[a0]]), A1=np.array([[a1]])
        )
        k, t = 2, 1.3**2 * 1.2
        w = mp.log(t) - 2 * mp.log(mp.mpf("1.3"))
        ref = mp.mpf(0)
        for n in range(80):
            ref += (
                mp.binomial(n + k, k)
                * mp.mpf(a0) ** n
                * w ** (n * alpha + k * alpha + beta_ - 1)
                / mp.gamma(n * alpha + k * alpha + beta_)
            )
        ref *= mp.mpf(a1) ** k
        assert y_k_commuting(spec, k, t, 1.0)[0, 0] == pytest.approx(float(ref), rel=1e-12)

    def test_support_and_commutation_errors(self):
        spec = small_spec()
        with pytest.raises(SupportError):
            y_k_general(spec, 1, spec.h * 0.99, 1.0)
        with pytest.raises(NotCommutingError):
            y_k_commuting(spec, 1, 2.0, 1.0)
        with pytest.raises(DomainError):
            y_k_general(spec, -1, 2.0, 1.0)


class TestDelayedML:
    def test_support_below_diagonal(self, rng):
        spec = small_spec()
        for _ in range(20):
            s = rng.uniform(0.5, 2.0)
            t = s * rng.uniform(0.2, 0.999)
            assert np.all(delayed_ml(spec, t, s) == 0.0)
        assert np.allclose(delayed_ml(spec, 1.7, 1.7), np.eye(2))

    def test_reduction_without_delay_matrix(self):
        # A1 = 0 collapses to the weighted Mittag-Leffler kernel
        spec = small_spec(A1=np.zeros((2, 2)))
        for t in np.geomspace(1.01, 2.8, 17):
            expected = e_ml_matrix(spec.alpha, spec.beta, spec.A0, math.log(t))
            diff = np.linalg.norm(delayed_ml(spec, t, 1.0) - expected)
            assert diff <= 1e-10 * (1.0 + np.linalg.norm(expected))

    def test_reduction_without_drift_matrix(self):
        # A0 = 0 at s = 1 matches the pure-delay kernel branch for branch
        spec = small_spec(A0=np.zeros((2, 2)))
        for t in np.geomspace(1.02, spec.h**4 * 0.99, 23):
            got = delayed_ml(spec, t, 1.0)
            expected = pure_delay_ml(spec, math.log(t / spec.h))
            assert np.linalg.norm(got - expected) <= 1e-10 * (
                1.0 + np.linalg.norm(expected)
            )

    def test_commuting_equivalence_all_branches(self, rng):
        A0, A1 = commuting_pair(rng)
        spec = DelayedMLSpec(alpha=0.55, beta=0.55, h=1.3, A0=A0, A1=A1)
        for k in range(5):
            t = spec.h**k * 1.17
            g = delayed_ml(spec, t, 1.0, path="general")
            c = delayed_ml(spec, t, 1.0, path="commuting")
            assert np.linalg.norm(g - c) <= 1e-6 * np.linalg.norm(c)

    def test_classical_exponential_product(self, rng):
        # alpha = beta = 1 with a permutable pair: drift exponential times
        # the delayed exponential with the shifted delay matrix
        from scipy.linalg import expm

        A0, A1 = commuting_pair(rng)
        h = 1.4
        spec = DelayedMLSpec(alpha=1.0, beta=1.0, h=h, A0=A0, A1=A1)
        A11 = A1 @ expm(-A0 * math.log(h))
        for t in (1.2, 1.9, 2.9, 3.7):
            s = 1.0
            k = delay_index(t, s, h)
            ref = np.zeros((2, 2))
            for j in range(k + 1):
                w = math.log(t / s) - j * math.log(h)
                ref += expm(A0 * math.log(t / s)) @ np.linalg.matrix_power(A11, j) * (
                    w**j / math.factorial(j)
                )
            got = delayed_ml(spec, t, s)
            assert np.linalg.norm(got - ref) <= 1e-8 * max(1.0, np.linalg.norm(ref))

    def test_fractional_integral_recursion(self):
        # applying the order-(1-alpha) integral to a branch term reproduces the
        # unweighted-kernel integral of the previous one
        spec = small_spec(alpha=0.5, beta=0.5, h=1.4)
        k, s = 1, 1.0
        t = s * spec.h**k * 1.25

        def y_k_of_r(r):
            return y_k_general(spec, k, r, s)

        lhs = hadamard_differintegral(
            y_k_of_r, -(1.0 - spec.alpha), s * spec.h**k, t
        )
        from hadamard_delay.logquad import log_integrate_u

        def g(u, d_lo, d_hi):
            kern = ml_matrix_at(spec.alpha, 1.0, spec.A0, d_hi, spec.series)
            inner = np.stack(
                [y_k_general(spec, k - 1, math.exp(ui) / spec.h, s) for ui in u]
            )
            return np.matmul(kern @ spec.A1, inner)

        quad = QuadraturePolicy(
            nodes_per_panel=24,
            panel_count=12,
            endpoint_exponents=(spec.beta - 1.0, 0.0),
        )
        rhs = log_integrate_u(g, math.log(s * spec.h**k), math.log(t), quad)
        assert np.linalg.norm(lhs - rhs) <= 1e-6 * max(1.0, np.linalg.norm(rhs))


class TestNormBound:
    def test_trivial_scalar_unit(self):
        spec = DelayedMLSpec(
            alpha=0.5, beta=1.0, h=1.3, A0=np.zeros((1, 1)), A1=np.zeros((1, 1))
        )
        assert norm_bound(spec, 2.0, 1.0) == pytest.approx(1.0, rel=1e-12)

    def test_scalar_nonnegative_equality(self):
        spec = DelayedMLSpec(
            alpha=0.5, beta=0.5, h=1.3, A0=np.array([[0.4]]), A1=np.array([[0.3]])
        )
        for t in (1.2, 1.7, 2.4):
            bound = norm_bound(spec, t, 1.0)
            value = abs(delayed_ml(spec, t, 1.0)[0, 0])
            assert bound == pytest.approx(value, rel=1e-9)

    def test_dominates_frobenius(self, rng):
        spec = small_spec(
            alpha=0.45,
            h=1.35,
            quad=QuadraturePolicy(nodes_per_panel=16, panel_count=8),
        )
        for _ in range(50):
            s = rng.uniform(0.6, 1.5)
            t = s * spec.h ** rng.uniform(0.01, 3.8)
            assert np.linalg.norm(delayed_ml(spec, t, s)) <= norm_bound(spec, t, s)

    def test_scalar_series_branch_cutoff(self):
        # vanished branch arguments with positive exponents contribute nothing
        val = scalar_delay_series(0.5, 0.4, 0.5, 1.2, [0.7, 0.0], SeriesPolicy0())
        ref = scalar_delay_series(0.5, 0.4, 0.5, 1.2, [0.7], SeriesPolicy0())
        assert val == pytest.approx(ref, rel=1e-14)


def SeriesPolicy0():
    from hadamard_delay.special import SeriesPolicy

    return SeriesPolicy()
