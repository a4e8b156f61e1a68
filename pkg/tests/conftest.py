import math

import numpy as np
import pytest

from hadamard_delay.delayed_ml import DelayedMLSpec
from hadamard_delay.problems import HistorySpec, LinearDelayProblem
from hadamard_delay.special import gamma, rgamma


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def commuting_pair(rng, n=2, scale=0.6):
    """Random permutable pair: polynomials in one random matrix."""
    M = rng.normal(size=(n, n)) * scale
    c = rng.normal(size=4) * scale
    A0 = c[0] * np.eye(n) + c[1] * M
    A1 = c[2] * np.eye(n) + c[3] * M @ M
    return A0, A1


def power_history(a, alpha, h, n):
    """Consistent history carrying weighted initial value a at (1/h)+."""
    c = np.asarray(a, dtype=float) / gamma(alpha)
    return HistorySpec(
        phi=lambda t: c * math.log(t * h) ** (alpha - 1.0),
        phi_frac_deriv=lambda t: np.zeros(n),
        singular_exponent=alpha - 1.0,
    )


def constant_history(value, alpha, h):
    value = np.asarray(value, dtype=float)
    rg = rgamma(1.0 - alpha)
    return HistorySpec(
        phi=lambda t: value,
        phi_frac_deriv=lambda t: value * rg * math.log(t * h) ** (-alpha),
        singular_exponent=-alpha,
    )


def bounded_power_history(value, alpha, h):
    """Smooth history (ln th)^alpha with a constant fractional derivative."""
    value = np.asarray(value, dtype=float)
    dcoef = gamma(alpha + 1.0)
    return HistorySpec(
        phi=lambda t: value * math.log(t * h) ** alpha,
        phi_frac_deriv=lambda t: value * dcoef,
        singular_exponent=0.0,
    )


def linear_problem(alpha, h, l, A0, A1, a, history, forcing=None, **spec_kw):
    spec = DelayedMLSpec(alpha=alpha, beta=alpha, h=h, A0=A0, A1=A1, **spec_kw)
    return LinearDelayProblem(
        spec=spec,
        a=np.asarray(a, dtype=float),
        history=history,
        forcing=forcing,
        horizon_exponent=l,
    )
