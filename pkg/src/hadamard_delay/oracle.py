r"""Independent brute-force validation machinery.

Everything here works in the log coordinate u = ln t, where the Hadamard
operators become Riemann-Liouville ones with kernel (u - v)^(alpha-1) and the
multiplicative delay t/h becomes the shift u - ln h.  The solvers are checked
against:

* ``direct_solve`` -- product-integration (piecewise-linear-in-the-density)
  marching on the equivalent Volterra form, advanced lag window by lag
  window with the delayed term taken from already-computed data;
* ``hadamard_differintegral`` -- fractional integral/derivative by a
  self-contained tanh-sinh rule plus a high-order log-derivative stencil.

None of the Gauss-Jacobi machinery of the main path is used here: the
weights below are derived independently (exact moments of the kernel over
grid cells, double-exponential nodes).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, StepSizeError
from .logquad import QuadraturePolicy
from .problems import HistorySpec, LinearDelayProblem, SemilinearProblem, Trajectory

__all__ = [
    "LogSubstitutedProblem",
    "to_log_coordinates",
    "to_problem_coordinates",
    "direct_solve",
    "hadamard_differintegral",
    "numeric_history_derivative",
]


# ---------------------------------------------------------------------------
# tanh-sinh quadrature (own nodes/weights; handles endpoint power singularities)
# ---------------------------------------------------------------------------

_DE_CAP = 120.0  # cap on pi/2*sinh(kh); endpoint distances down to ~1e-104


def _tanh_sinh_rule(level: int):
    step = 1.0 / 2.0**level
    kmax = int(math.asinh(2.0 * _DE_CAP / math.pi) / step)
    k = np.arange(-kmax, kmax + 1)
    u = 0.5 * math.pi * np.sinh(k * step)
    weights = step * 0.5 * math.pi * np.cosh(k * step) / np.cosh(u) ** 2
    # distances of the node from the endpoints of [-1, 1], computed stably
    d_lo = 2.0 / (1.0 + np.exp(-2.0 * u))  # 1 + tanh(u)
    d_hi = 2.0 / (1.0 + np.exp(2.0 * u))  # 1 - tanh(u)
    return d_lo, d_hi, weights


def de_integrate(g, a: float, b: float, level: int = 6):
    """Tanh-sinh integral of g over (a, b); g(v, d_lo, d_hi) takes node arrays."""
    if not b > a:
        raise DomainError(f"empty integration interval ({a}, {b})")
    d_lo, d_hi, w = _tanh_sinh_rule(level)
    half = 0.5 * (b - a)
    lo = half * d_lo
    hi = half * d_hi
    vals = np.asarray(g(a + lo, lo, hi), dtype=float)
    w = (w * half).reshape((-1,) + (1,) * (vals.ndim - 1))
    return np.sum(w * vals, axis=0)


def _de_level(quad: Optional[QuadraturePolicy]) -> int:
    if quad is None:
        return 6
    total = quad.nodes_per_panel * quad.panel_count
    return max(4, min(9, int(round(math.log2(max(total, 16) / 3.0)))))


# ---------------------------------------------------------------------------
# numeric Hadamard differintegral
# ---------------------------------------------------------------------------


def _frac_integral_u(y_u, order: float, u0: float, U: float, level: int, cuts=()):
    """(1/Gamma(order)) * int_{u0}^{U} (U - v)^(order-1) y(u = v) dv."""
    from .special import gamma as _gamma

    edges = [u0] + [c for c in sorted(cuts) if u0 < c < U] + [U]
    total = None
    for i in range(len(edges) - 1):
        a, b = edges[i], edges[i + 1]
        base_off = a - u0
        tail = U - b

        def g(v, d_lo, d_hi):
            x = base_off + d_lo  # ln(t/base) of the node, exact on the first cut
            kernel = (tail + d_hi) ** (order - 1.0)
            vals = np.asarray(y_u(x), dtype=float)
            return kernel.reshape((-1,) + (1,) * (vals.ndim - 1)) * vals

        part = de_integrate(g, a, b, level)
        total = part if total is None else total + part
    return total / _gamma(order)


def hadamard_differintegral(
    y: Callable,
    order: float,
    base: float,
    t: float,
    quad: Optional[QuadraturePolicy] = None,
    *,
    breakpoints=(),
    log_arg: bool = False,
):
    """Hadamard fractional integral (order < 0) or derivative (order > 0) of y at t.

    ``order`` in (-1, 0) requests the integral of order |order| based at
    ``base``; order in (0, 1) requests the derivative, computed as the
    (1-order) integral followed by a five-point t d/dt stencil in ln t.
    ``breakpoints`` lists interior t-values where y has integrable kinks
    (the rule is applied separately on each side).  With ``log_arg`` the
    integrand is called as y(x) with x = ln(t/base), which avoids the
    double-precision wall next to the base point; otherwise y(t) is called
    and node offsets below ~1e-15 of the base are unreachable.
    """
    if not (-1.0 < order < 1.0) or order == 0.0:
        raise DomainError(f"order must lie in (-1, 0) or (0, 1), got {order}")
    if not (base > 0.0 and t > base):
        raise DomainError(f"need t > base > 0, got base={base}, t={t}")
    u0 = math.log(base)
    U = math.log(t)
    level = _de_level(quad)
    cuts = tuple(math.log(b) for b in breakpoints)
    if log_arg:
        scalar_call = y
    else:
        wall = 1e-15 * max(1.0, abs(u0))

        def scalar_call(x):
            return y(base * math.exp(max(x, wall)))

    def y_u(x):
        return np.stack(
            [np.atleast_1d(np.asarray(scalar_call(float(xi)), dtype=float))
             for xi in np.atleast_1d(x)]
        )

    def finish(out):
        return float(out[0]) if out.shape == (1,) else out

    if order < 0.0:
        return finish(_frac_integral_u(y_u, -order, u0, U, level, cuts))

    def F(Uq):
        return _frac_integral_u(y_u, 1.0 - order, u0, Uq, level, cuts)

    delta = max(1e-4 * (U - u0), 2e-6)
    delta = min(delta, 0.25 * (U - u0))
    stencil = (
        F(U - 2 * delta) - 8.0 * F(U - delta) + 8.0 * F(U + delta) - F(U + 2 * delta)
    ) / (12.0 * delta)
    return finish(stencil)


# ---------------------------------------------------------------------------
# log-substituted problem and the direct Volterra solver
# ---------------------------------------------------------------------------


@dataclass
class LogSubstitutedProblem:
    """Delay problem transported to u = ln t.

    History lives on (-lag, 0], the equation on (0, horizon_exponent * lag];
    ``history_frac_deriv_u`` is the order-``order`` Riemann-Liouville
    derivative of the history based at -lag, as a function of u.
    """

    order: float
    lag: float
    horizon_exponent: int
    A0: np.ndarray
    A1: np.ndarray
    a: np.ndarray
    history_u: Callable[[float], np.ndarray]
    history_frac_deriv_u: Callable[[float], np.ndarray]
    forcing_u: Optional[Callable[[float], np.ndarray]] = None
    rhs_u: Optional[Callable[[float, np.ndarray], np.ndarray]] = None
    gamma_weight: float = 0.0
    history_mode: str = "analytic"
    history_singular_exponent: float = 0.0

    def __post_init__(self):
        if not self.lag > 0.0:
            raise DomainError(f"lag must be positive, got {self.lag}")
        if not 0.0 < self.order < 1.0:
            raise DomainError(f"order must lie in (0, 1), got {self.order}")

    @property
    def n(self) -> int:
        return self.A0.shape[0]

    @property
    def horizon(self) -> float:
        return self.lag * self.horizon_exponent


def numeric_history_derivative(history: HistorySpec, alpha: float, h: float):
    """Fractional derivative of the history by differintegration, as a function of u.

    Samples q(u) = (u + lag)^alpha * (D^alpha phi)(e^u) on a grid graded
    toward -lag and interpolates monotically; the weight keeps the
    interpolated quantity bounded for histories that do not vanish at 1/h.
    """
    from scipy.interpolate import PchipInterpolator

    tau = math.log(h)
    xi = np.linspace(0.0, 1.0, 44) ** 2.5
    us = -tau + tau * (1e-4 + (1.0 - 2e-4) * xi)
    samples = np.stack(
        [
            np.atleast_1d(
                hadamard_differintegral(history.phi, alpha, 1.0 / h, math.exp(u))
            ).astype(float)
            for u in us
        ]
    )
    weighted = (us + tau)[:, None] ** alpha * samples
    interp = PchipInterpolator(us, weighted, axis=0, extrapolate=True)

    def psi_u(u):
        return interp(u) / (u + tau) ** alpha

    return psi_u


def to_log_coordinates(problem) -> LogSubstitutedProblem:
    """Transport a linear or semilinear problem to u = ln t coordinates."""
    if isinstance(problem, SemilinearProblem):
        lin = problem.linear
        rhs = problem.rhs
        gamma_w = problem.gamma_weight
    elif isinstance(problem, LinearDelayProblem):
        lin = problem
        rhs = None
        gamma_w = 0.0
    else:
        raise TypeError(f"unsupported problem type {type(problem)!r}")
    spec = lin.spec
    history = lin.history

    def history_u(u):
        return np.atleast_1d(np.asarray(history.phi(math.exp(u)), dtype=float))

    if history.phi_frac_deriv is not None:
        def psi_u(u):
            return np.atleast_1d(np.asarray(history.phi_frac_deriv(math.exp(u)), dtype=float))
    else:
        psi_u = numeric_history_derivative(history, spec.alpha, spec.h)

    forcing_u = None
    if rhs is None and lin.forcing is not None:
        def forcing_u(u):
            return np.atleast_1d(np.asarray(lin.forcing(math.exp(u)), dtype=float))

    rhs_u = None
    if rhs is not None:
        def rhs_u(u, x):
            return np.atleast_1d(np.asarray(rhs(math.exp(u), x), dtype=float))

    return LogSubstitutedProblem(
        order=spec.alpha,
        lag=spec.log_h,
        horizon_exponent=lin.horizon_exponent,
        A0=spec.A0.copy(),
        A1=spec.A1.copy(),
        a=lin.a.copy(),
        history_u=history_u,
        history_frac_deriv_u=psi_u,
        forcing_u=forcing_u,
        rhs_u=rhs_u,
        gamma_weight=gamma_w,
        history_mode=history.mode,
        history_singular_exponent=history.singular_exponent,
    )


def to_problem_coordinates(lsp: LogSubstitutedProblem):
    """Inverse transport; callables are wrapped back to functions of t."""
    from .delayed_ml import DelayedMLSpec

    h = math.exp(lsp.lag)
    spec = DelayedMLSpec(alpha=lsp.order, beta=lsp.order, h=h, A0=lsp.A0, A1=lsp.A1)
    history = HistorySpec(
        phi=lambda t: lsp.history_u(math.log(t)),
        phi_frac_deriv=lambda t: lsp.history_frac_deriv_u(math.log(t)),
        mode="analytic",
        singular_exponent=lsp.history_singular_exponent,
    )
    forcing = None
    if lsp.forcing_u is not None:
        forcing = lambda t: lsp.forcing_u(math.log(t))
    linear = LinearDelayProblem(
        spec=spec,
        a=lsp.a,
        history=history,
        forcing=forcing,
        horizon_exponent=lsp.horizon_exponent,
    )
    if lsp.rhs_u is None:
        return linear
    return SemilinearProblem(
        linear=linear,
        rhs=lambda t, y: lsp.rhs_u(math.log(t), y),
        gamma_weight=lsp.gamma_weight,
    )


#: grading exponent of the per-window mesh (cells shrink toward each window
#: start, where the solution carries fractional startup layers)
_MESH_GRADING = 3.0


def direct_solve(lsp: LogSubstitutedProblem, steps_per_lag: int) -> Trajectory:
    """Product-integration marching on the Volterra form of the delay problem.

    Uniform grid aligned with the lag, piecewise-linear density between grid
    points with kernel moments integrated exactly, implicit in the A0 term.
    The free term carries the weighted initial value and the history's
    fractional derivative:

        x(u) = a (u+lag)^(alpha-1)/Gamma(alpha)
             + I^alpha[ psi * 1_(-lag,0] + (A0 x + A1 x(.-lag) + f) * 1_(0,.] ](u).
    """
    if steps_per_lag < 8:
        raise StepSizeError(f"steps_per_lag must be >= 8, got {steps_per_lag}")
    from .special import gamma as _gamma

    alpha = lsp.order
    tau = lsp.lag
    n = lsp.n
    N = steps_per_lag * lsp.horizon_exponent
    # window-congruent graded mesh: node (m, k) = (m-1) tau + xi_k, so the
    # delay shift maps node i exactly onto node i - steps_per_lag
    xi = tau * (np.arange(steps_per_lag + 1) / steps_per_lag) ** _MESH_GRADING
    u = np.concatenate(
        [[0.0]] + [(m * tau + xi[1:]) for m in range(lsp.horizon_exponent)]
    )
    d_lo, d_hi, wts = _tanh_sinh_rule(6)

    def history_off(off):
        # history value at u = -tau + off; offsets below the double-precision
        # wall of the t-form callable are clamped (their kernel mass is tiny)
        return np.atleast_1d(lsp.history_u(-tau + max(float(off), 1e-14)))

    # free term K(u_i): weighted initial value, the history's fractional
    # derivative, and the first-window delayed contribution A1 phi(. - tau).
    # The last one is handled here because the history may carry the
    # (u + tau)^(alpha-1) singularity of the weighted initial value, which
    # the piecewise-linear marching density cannot represent.
    K = lsp.a[None, :] * ((u[1:] + tau) ** (alpha - 1.0) / _gamma(alpha))[:, None]

    v_hist = -tau + np.maximum(0.5 * tau * d_lo, 1e-14)
    psi = np.stack([np.atleast_1d(lsp.history_frac_deriv_u(float(vi))) for vi in v_hist])
    if np.any(psi != 0.0):
        kernel = (u[1:, None] - v_hist[None, :]) ** (alpha - 1.0)
        K = K + (kernel * (wts * 0.5 * tau)[None, :]) @ psi / _gamma(alpha)

    if np.any(lsp.A1 != 0.0):
        # rows with u_i > tau: integrate the full window (0, tau); the kernel
        # peak just beyond v = tau is measured from that endpoint exactly
        phi_full = np.stack([history_off(o) for o in 0.5 * tau * d_lo]) @ lsp.A1.T
        rows = np.nonzero(u[1:] > tau + 1e-15)[0]
        if rows.size:
            gap = u[rows + 1 - steps_per_lag]  # u_i - tau on the congruent mesh
            kernel = (gap[:, None] + (0.5 * tau * d_hi)[None, :]) ** (alpha - 1.0)
            K[rows] += (kernel * (wts * 0.5 * tau)[None, :]) @ phi_full / _gamma(alpha)
        for i in range(1, min(steps_per_lag, N) + 1):
            # windows ending at or before tau: kernel singular at the upper end
            half = 0.5 * u[i]
            phi_vals = np.stack([history_off(o) for o in half * d_lo]) @ lsp.A1.T
            K[i - 1] += ((half * d_hi) ** (alpha - 1.0) * wts * half) @ phi_vals / _gamma(alpha)

    x = np.empty((N, n))
    # the marching density is split: G is the continuous part A0 x + f, and
    # L = A1 x(. - lag) is supported on cells past the first window boundary,
    # so the jump of the delayed term at each boundary is never interpolated
    # across a cell (the first window's delayed part already sits in K)
    G = np.empty((N + 1, n))
    L = np.zeros((N + 1, n))
    # density at u = 0+; the solution limit there is the free-term limit
    x0 = lsp.a * tau ** (alpha - 1.0) / _gamma(alpha)
    if np.any(psi != 0.0):
        k0 = (0.5 * tau * d_hi) ** (alpha - 1.0)  # exact distance of -v_hist from 0
        x0 = x0 + ((k0 * wts * 0.5 * tau) @ psi) / _gamma(alpha)
    f0 = np.zeros(n)
    if lsp.forcing_u is not None:
        f0 = np.atleast_1d(lsp.forcing_u(1e-12))
    if lsp.rhs_u is not None:
        f0 = np.atleast_1d(lsp.rhs_u(1e-12, x0))
    G[0] = lsp.A0 @ x0 + f0

    s = steps_per_lag
    gam = _gamma(alpha)
    eye = np.eye(n)
    for i in range(1, N + 1):
        j = i - s
        if j == 0:
            L[i] = lsp.A1 @ np.atleast_1d(lsp.history_u(0.0))
        elif j >= 1:
            L[i] = lsp.A1 @ x[j - 1]
        # piecewise-linear density against exact kernel moments on each cell
        A = u[i] - u[:i]
        B = u[i] - u[1 : i + 1]
        width = u[1 : i + 1] - u[:i]
        pa, pb = A**alpha, B**alpha
        m0 = (pa - pb) / alpha
        m1 = A * m0 - (pa * A - pb * B) / (alpha + 1.0)
        wr = m1 / (width * gam)
        wl = m0 / gam - wr
        known = K[i - 1] + np.tensordot(wl, G[:i], axes=(0, 0))
        if i >= 2:
            known += np.tensordot(wr[:-1], G[1:i], axes=(0, 0))
        if i > s:
            # delayed density on cells j = s..i-1 only (left and right values)
            known += np.tensordot(wl[s:i], L[s:i], axes=(0, 0))
            known += np.tensordot(wr[s:i], L[s + 1 : i + 1], axes=(0, 0))
        c_impl = wr[-1]
        if lsp.rhs_u is None:
            f_i = (
                np.atleast_1d(lsp.forcing_u(float(u[i])))
                if lsp.forcing_u is not None
                else np.zeros(n)
            )
            xi = np.linalg.solve(eye - c_impl * lsp.A0, known + c_impl * f_i)
            G[i] = lsp.A0 @ xi + f_i
        else:
            xi = x[i - 2] if i >= 2 else x0
            for _ in range(40):
                f_i = np.atleast_1d(lsp.rhs_u(float(u[i]), xi))
                xi_new = np.linalg.solve(eye - c_impl * lsp.A0, known + c_impl * f_i)
                if np.linalg.norm(xi_new - xi) <= 1e-14 * (1.0 + np.linalg.norm(xi_new)):
                    xi = xi_new
                    break
                xi = xi_new
            G[i] = lsp.A0 @ xi + np.atleast_1d(lsp.rhs_u(float(u[i]), xi))
        x[i - 1] = xi

    keep = np.array([i for i in range(1, N + 1) if i % s != 0])
    return Trajectory(
        grid=np.exp(u[keep]), values=x[keep - 1], gamma_weight=lsp.gamma_weight
    )
