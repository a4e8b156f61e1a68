r"""Explicit solution of the linear Hadamard fractional delay system.

With Y the delayed Mittag-Leffler kernel of the problem (beta = alpha), the
solution of the normalised problem (history phi on (1/h, 1], weighted value
a at (1/h)+, equation on (1, T]) is

    y(t) = Y(t, 1/h) a
         + int_{1/h}^{1} Y(t, s) [ (D^alpha phi)(s) - A0 phi(s) ] ds/s
         + int_{1}^{t} Y(t, s) f(s) ds/s.

Both integrals are split at the delay echoes s = t/h^k, where a new branch
term of Y switches on with exponent k*alpha+alpha-1; negative exponents are
declared to the weighted quadrature, positive ones are left to the graded
panels.  Grids cluster toward the left end of each delay interval (in ln t)
and keep a fixed offset from every breakpoint.
"""

from __future__ import annotations

import math
from dataclasses import replace
from typing import Callable, Optional

import numpy as np

from .delayed_ml import DelayedMLSpec, _ensure_levels, _eval_level, delay_index, delayed_ml
from .errors import DomainError
from .logquad import log_integrate_u
from .problems import HistorySpec, LinearDelayProblem, Trajectory
from .special import ml_matrix_at

__all__ = [
    "make_grid",
    "history_inhomogeneity",
    "evaluate_solution",
    "solve_forced_zero_ic",
    "solve_homogeneous",
    "solve_full",
    "check_initial_condition",
]

#: offset (in ln t) of grid points from the delay breakpoints
BREAKPOINT_OFFSET = 1e-9


def make_grid(
    problem: LinearDelayProblem,
    per_interval: int = 24,
    include_history: bool = False,
) -> np.ndarray:
    """Solution grid with left-clustered points on each delay interval.

    Points sit in (h^(p-1), h^p] for p = 1..l (plus the history interval
    when requested), offset from the breakpoints and clustered toward the
    left endpoint where the (ln .)^(alpha-1) factors are steep.
    """
    if per_interval < 2:
        raise DomainError(f"per_interval must be >= 2, got {per_interval}")
    tau = problem.spec.log_h
    first = 0 if include_history else 1
    xi = (np.arange(per_interval) + 1.0) / per_interval
    cluster = 1.0 - np.cos(0.5 * math.pi * xi)
    us = []
    for p in range(first, problem.horizon_exponent + 1):
        lo = (p - 1) * tau + BREAKPOINT_OFFSET
        hi = p * tau - BREAKPOINT_OFFSET
        us.append(lo + (hi - lo) * cluster)
    return np.exp(np.concatenate(us))


def history_inhomogeneity(problem: LinearDelayProblem):
    """The function g(s) = (D^alpha phi)(s) - A0 phi(s) and its endpoint exponent."""
    history = problem.history
    A0 = problem.spec.A0

    if history.phi_frac_deriv is not None:
        psi = lambda s: np.atleast_1d(np.asarray(history.phi_frac_deriv(s), dtype=float))
    else:
        from .oracle import numeric_history_derivative

        if "psi" not in problem._cache:
            problem._cache["psi"] = numeric_history_derivative(
                history, problem.spec.alpha, problem.spec.h
            )
        psi_u = problem._cache["psi"]
        psi = lambda s: np.atleast_1d(np.asarray(psi_u(math.log(s)), dtype=float))

    def g(s: float) -> np.ndarray:
        return psi(s) - A0 @ np.atleast_1d(np.asarray(history.phi(s), dtype=float))

    return g, history.singular_exponent


def _y_action_integral(
    spec: DelayedMLSpec,
    t: float,
    u_lo: float,
    u_hi: float,
    vec_of_s: Callable[[float], np.ndarray],
    lo_exponent: float = 0.0,
    min_panels: int = 0,
) -> np.ndarray:
    """int over s in (e^{u_lo}, e^{u_hi}) of Y(t, s) v(s) ds/s, branch aware."""
    lnt = math.log(t)
    tau = spec.log_h
    alpha, beta_ = spec.alpha, spec.beta
    # delay echoes t/h^k inside the interval, from the top edge downward;
    # k = 0 is the support boundary s = t itself (active when the evaluation
    # point lies inside the history interval)
    edges = [u_hi]
    k = -1
    while True:
        k += 1
        cut = lnt - k * tau
        if cut <= u_lo + 1e-13:
            break
        if cut < u_hi - 1e-13:
            edges.append(cut)
    edges.append(u_lo)

    k_max = delay_index(t, math.exp(u_lo) * (1.0 + 1e-14), spec.h)
    table = _ensure_levels(spec, max(k_max, 0), lnt - u_lo) if k_max >= 1 else None

    total = np.zeros(spec.n)
    for i in range(len(edges) - 1):
        hi, lo = edges[i], edges[i + 1]
        mid = math.exp(0.5 * (hi + lo))
        k_piece = delay_index(t, mid, spec.h)
        if k_piece < 0:
            continue
        # does a branch term switch off exactly at this piece's upper edge?
        sing = abs(hi - (lnt - k_piece * tau)) < 1e-12 * max(1.0, abs(lnt))
        e_top = k_piece * alpha + beta_ - 1.0
        hi_exp = e_top if (sing and e_top < 0.0) else 0.0
        piece_lo_exp = lo_exponent if i == len(edges) - 2 else 0.0
        quad = replace(
            spec.quad,
            panel_count=max(spec.quad.panel_count, min_panels),
            endpoint_exponents=(piece_lo_exp, hi_exp),
        )

        def g(u, d_lo, d_hi):
            vec = np.stack([np.atleast_1d(vec_of_s(math.exp(ui))) for ui in u])
            Y = np.zeros((len(u), spec.n, spec.n))
            for j in range(k_piece + 1):
                if sing and j == k_piece:
                    w = d_hi  # exact distance to the vanishing branch argument
                else:
                    w = (lnt - j * tau) - u
                if j == 0:
                    E = ml_matrix_at(alpha, beta_, spec.A0, w, spec.series)
                    Y += (w ** (beta_ - 1.0))[:, None, None] * E
                else:
                    Y += _eval_level(table, j, spec, w)
            return np.matmul(Y, vec[:, :, None])[:, :, 0]

        total = total + log_integrate_u(g, lo, hi, quad)
    return total


def evaluate_solution(
    problem: LinearDelayProblem,
    ts,
    rhs_of_s: Optional[Callable[[float], np.ndarray]] = None,
    rhs_exponent: float = 0.0,
    use_history: bool = True,
) -> np.ndarray:
    """Solution values at the given t points (each in (1/h, T]).

    ``rhs_of_s`` supplies the forcing under the Duhamel integral from 1 to t
    (defaults to the problem forcing); ``rhs_exponent`` declares its power
    behaviour in ln s at s = 1+.  With ``use_history`` False only the forced
    term is evaluated.
    """
    spec = problem.spec
    tau = spec.log_h
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    if rhs_of_s is None and problem.forcing is not None:
        rhs_of_s = problem.forcing_or_zero
    g_fn = g_exp = None
    if use_history:
        g_fn, g_exp = history_inhomogeneity(problem)

    # warm the level cache once for the largest argument
    k_top = delay_index(float(ts.max()), 1.0 / spec.h, spec.h)
    if k_top >= 1:
        _ensure_levels(spec, k_top, math.log(float(ts.max())) + tau)

    out = np.empty((len(ts), spec.n))
    for i, t in enumerate(ts):
        t = float(t)
        if not 1.0 / spec.h < t <= problem.T * (1.0 + 1e-12):
            raise DomainError(f"evaluation point {t} outside (1/h, T]")
        val = np.zeros(spec.n)
        if use_history:
            val = delayed_ml(spec, t, 1.0 / spec.h) @ problem.a
            val = val + _y_action_integral(
                spec, t, -tau, 0.0, g_fn, lo_exponent=g_exp, min_panels=16
            )
        if rhs_of_s is not None and t > 1.0:
            val = val + _y_action_integral(
                spec, t, 0.0, math.log(t), rhs_of_s, lo_exponent=rhs_exponent
            )
        out[i] = val
    return out


def solve_forced_zero_ic(problem: LinearDelayProblem, grid) -> Trajectory:
    """Duhamel solution with zero weighted initial value and zero history."""
    if np.linalg.norm(problem.a) != 0.0:
        raise DomainError("solve_forced_zero_ic requires a = 0 (use solve_full)")
    values = evaluate_solution(problem, grid, use_history=False)
    return Trajectory(grid=np.asarray(grid, dtype=float), values=values)


def solve_homogeneous(problem: LinearDelayProblem, grid) -> Trajectory:
    """Solution carrying only the initial value and history terms (f = 0)."""
    values = evaluate_solution(problem, grid, rhs_of_s=lambda s: np.zeros(problem.n))
    return Trajectory(grid=np.asarray(grid, dtype=float), values=values)


def solve_full(problem: LinearDelayProblem, grid) -> Trajectory:
    """Superposition of the homogeneous and forced solution parts."""
    values = evaluate_solution(problem, grid)
    return Trajectory(grid=np.asarray(grid, dtype=float), values=values)


def check_initial_condition(traj: Trajectory, problem: LinearDelayProblem) -> float:
    """Residual of the weighted initial condition at (1/h)+.

    Numerically applies the Hadamard integral of order 1 - alpha to the
    trajectory near 1/h and extrapolates its limit; the return value
    ||limit - a|| is a diagnostic that should vanish under refinement.
    """
    from .oracle import hadamard_differintegral

    alpha = problem.spec.alpha
    tau = problem.spec.log_h
    sel = traj.grid <= math.exp(-tau + 0.75 * tau)
    if np.count_nonzero(sel) < 4:
        raise DomainError("trajectory does not resolve the region above 1/h")
    us = np.log(traj.grid[sel])
    weighted = (us + tau)[:, None] ** (1.0 - alpha) * np.atleast_2d(traj.values[sel])
    from scipy.interpolate import PchipInterpolator

    interp = PchipInterpolator(us, weighted, axis=0, extrapolate=True)

    def y_u(x):
        x = np.atleast_1d(x)
        return interp(x - tau) / x[:, None] ** (1.0 - alpha)

    d1 = 0.02 * tau
    vals = []
    for d in (d1, 2.0 * d1):
        vals.append(
            hadamard_differintegral(
                y_u, -(1.0 - alpha), 1.0 / problem.spec.h, math.exp(-tau + d), log_arg=True
            )
        )
    # the transient decays like d^alpha; eliminate its leading coefficient
    w1, w2 = d1**alpha, (2.0 * d1) ** alpha
    limit = (vals[0] * w2 - vals[1] * w1) / (w2 - w1)
    return float(np.linalg.norm(limit - problem.a))
