r"""Delayed Mittag-Leffler matrix functions with logarithm.

The two-parameter piecewise kernel Y(t, s) generated by a pair (A0, A1) with
delay base h > 1 is assembled from branch terms

    Y_0(t, s)      = (ln t/s)^(beta-1) E_{alpha,beta}(A0; ln t/s),
    Y_k(t, s h^k)  = int_{s h^k}^t e_{alpha,alpha}(A0; ln t/r) A1
                       Y_{k-1}(r/h, s h^{k-1}) dr/r,     k >= 1,

summed over the branches supported at (t, s).  Each Y_k depends only on
w = ln(t / (s h^k)) and factors as w^(k*alpha+beta-1) * G_k(w^alpha) with
G_k entire, so the recursion is evaluated once per level on Chebyshev nodes
of the smooth factor G_k and reused everywhere; the quadrature behind each
level is the weighted log-kernel rule from :mod:`.logquad`.

For permutable pairs the closed form

    Y_k = A1^k sum_n C(n+k, k) A0^n w^(n*alpha+k*alpha+beta-1)
              / Gamma(n*alpha+k*alpha+beta)

is used instead, and the scalar version of that double series (with matrix
norms in place of the matrices) provides the norm majorant ``norm_bound``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial import chebyshev as _cheb

from .errors import (
    DomainError,
    NonConvergenceError,
    NotCommutingError,
    SingularPointError,
    SupportError,
)
from .logquad import QuadraturePolicy, log_integrate_u
from .special import (
    SeriesPolicy,
    as_square_matrix,
    gammaln,
    ml_matrix_at,
    e_ml_matrix,
    rgamma,
)

__all__ = [
    "DelayedMLSpec",
    "delay_index",
    "pure_delay_ml",
    "y_k_general",
    "y_k_commuting",
    "delayed_ml",
    "norm_bound",
    "scalar_delay_series",
]

#: relative commutator size below which (A0, A1) is treated as permutable
COMMUTE_TOL = 1e-12

#: Chebyshev nodes used per recursion level for the smooth factor G_k
_CHEB_NODES = 32

#: headroom applied to the interpolation domain to avoid frequent rebuilds
_DOMAIN_SLACK = 1.25


@dataclass(frozen=True, eq=False)
class DelayedMLSpec:
    """Parameters of Y_{h,alpha,beta}^{A0,A1} plus evaluation policies."""

    alpha: float
    beta: float
    h: float
    A0: np.ndarray
    A1: np.ndarray
    series: SeriesPolicy = SeriesPolicy()
    quad: QuadraturePolicy = QuadraturePolicy()
    _cache: dict = field(default_factory=dict, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def __post_init__(self):
        # alpha = 1 is admitted for the classical-exponential reductions;
        # the solvers themselves require alpha < 1
        if not 0.0 < self.alpha <= 1.0:
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not self.beta > 0.0:
            raise DomainError(f"beta must be positive, got {self.beta}")
        if not self.h > 1.0:
            raise DomainError(f"delay base h must exceed 1, got {self.h}")
        A0 = as_square_matrix(self.A0)
        A1 = as_square_matrix(self.A1)
        if A0.shape != A1.shape:
            raise DomainError(f"A0 and A1 must share a dimension, got {A0.shape} vs {A1.shape}")
        object.__setattr__(self, "A0", A0)
        object.__setattr__(self, "A1", A1)

    @property
    def n(self) -> int:
        return self.A0.shape[0]

    @property
    def log_h(self) -> float:
        return math.log(self.h)

    def is_commuting(self) -> bool:
        comm = np.linalg.norm(self.A0 @ self.A1 - self.A1 @ self.A0)
        scale = max(1.0, np.linalg.norm(self.A0) * np.linalg.norm(self.A1))
        return comm <= COMMUTE_TOL * scale


def delay_index(t: float, s: float, h: float) -> int:
    """Branch index k with s h^k < t <= s h^{k+1}; -1 when t <= s.

    Arguments within 1e-12 (relatively, in log space) of a breakpoint
    t = s h^m are snapped onto it and assigned to the left branch m - 1.
    """
    if not (t > 0.0 and s > 0.0):
        raise DomainError(f"delay_index requires positive t, s, got ({t}, {s})")
    if not h > 1.0:
        raise DomainError(f"delay base h must exceed 1, got {h}")
    r = (math.log(t) - math.log(s)) / math.log(h)
    m = round(r)
    if abs(r - m) <= 1e-12 * max(1.0, abs(r)):
        k = int(m) - 1
    else:
        k = math.ceil(r) - 1
    return max(k, -1)


def pure_delay_ml(spec: DelayedMLSpec, lnt: float) -> np.ndarray:
    """Pure-delay kernel E_{h,alpha,beta}^{A1}(ln t): A0 plays no role.

    The zero matrix for t <= 1/h, otherwise the finite branch sum
    sum_{j<=p} A1^j (ln t - (j-1) ln h)^(j*alpha+beta-1)/Gamma(j*alpha+beta)
    on the branch h^(p-1) < t <= h^p.
    """
    if not math.isfinite(lnt):
        raise DomainError(f"pure_delay_ml requires finite ln t, got {lnt}")
    n = spec.n
    tau = spec.log_h
    x = lnt + tau  # log of t/(1/h)
    if x <= 1e-12 * max(1.0, abs(lnt)):
        return np.zeros((n, n))
    p = delay_index(math.exp(lnt), 1.0 / spec.h, spec.h)
    out = np.zeros((n, n))
    power = np.eye(n)
    for j in range(p + 1):
        base = lnt - (j - 1) * tau
        exponent = j * spec.alpha + spec.beta - 1.0
        if base <= 0.0:
            if exponent < 0.0:
                raise SingularPointError(
                    f"branch term {j} is singular at its breakpoint (ln t = {lnt})"
                )
            continue
        out = out + power * base**exponent * rgamma(j * spec.alpha + spec.beta)
        power = power @ spec.A1
    return out


# ---------------------------------------------------------------------------
# general (non-commuting) path: per-level Chebyshev tables of G_k
# ---------------------------------------------------------------------------


class _LevelTable:
    """Piecewise-Chebyshev coefficients of the smooth factors G_k in z = w^alpha.

    The factors are entire but can grow like exp(c z^(1/alpha)), so the domain
    [0, z_max] is split into segments graded toward z_max (where the growth
    lives); each level stores one coefficient block per segment.
    """

    def __init__(self, z_max: float, n: int, segments: int):
        self.z_max = z_max
        self.n = n
        self.edges = z_max * np.sqrt(np.arange(segments + 1) / segments)
        self.coefs: list[list[np.ndarray]] = []  # [level][segment] -> (M, n*n)


def _segment_count(spec: DelayedMLSpec, w_max: float) -> int:
    # proxy for the decades G spans: growth rate ||A0||^(1/alpha) times w
    a0 = max(float(np.linalg.norm(spec.A0)), 1e-12)
    rate = math.exp(min(math.log(a0) / spec.alpha, 5.0))
    return int(min(8, max(1, math.ceil(rate * w_max / 2.5))))


def _cheb_nodes(z_lo: float, z_hi: float):
    theta = math.pi * (2.0 * np.arange(_CHEB_NODES) + 1.0) / (2.0 * _CHEB_NODES)
    xstd = np.cos(theta)
    return xstd, z_lo + 0.5 * (xstd + 1.0) * (z_hi - z_lo)


def _fit_values(xstd: np.ndarray, values: np.ndarray) -> np.ndarray:
    # interpolation through first-kind Chebyshev points; well conditioned
    V = _cheb.chebvander(xstd, _CHEB_NODES - 1)
    return np.linalg.solve(V, values.reshape(_CHEB_NODES, -1))


def _eval_level(table: _LevelTable, level: int, spec: DelayedMLSpec, w: np.ndarray) -> np.ndarray:
    """y_level(w) for an array of positive w, from the cached table."""
    w = np.atleast_1d(np.asarray(w, dtype=float))
    z = w**spec.alpha
    seg = np.clip(np.searchsorted(table.edges, z, side="right") - 1, 0, len(table.edges) - 2)
    G = np.empty((len(w), table.n, table.n))
    for s in np.unique(seg):
        sel = seg == s
        z_lo, z_hi = table.edges[s], table.edges[s + 1]
        xstd = 2.0 * (z[sel] - z_lo) / (z_hi - z_lo) - 1.0
        vals = _cheb.chebval(xstd, table.coefs[level][s])  # (n*n, N_sel)
        G[sel] = vals.T.reshape(-1, table.n, table.n)
    e = level * spec.alpha + spec.beta - 1.0
    return (w**e)[:, None, None] * G


def _build_level(table: _LevelTable, level: int, spec: DelayedMLSpec) -> None:
    alpha, beta_ = spec.alpha, spec.beta
    e_prev = (level - 1) * alpha + beta_ - 1.0
    # building a level is a one-off cost per spec, so grade deeper than the
    # per-integral default: the secondary w^(m*alpha) corrections next to the
    # endpoint weights converge with panel depth, not with nodes per panel
    quad = replace(
        spec.quad,
        panel_count=max(spec.quad.panel_count, 32),
        nodes_per_panel=max(spec.quad.nodes_per_panel, 16),
        endpoint_exponents=(e_prev, alpha - 1.0),
    )
    segments = []
    for s in range(len(table.edges) - 1):
        xstd, z_nodes = _cheb_nodes(table.edges[s], table.edges[s + 1])
        w_nodes = z_nodes ** (1.0 / alpha)
        if level == 0:
            values = ml_matrix_at(alpha, beta_, spec.A0, w_nodes, spec.series)
            segments.append(_fit_values(xstd, values))
            continue
        values = np.empty((_CHEB_NODES, spec.n, spec.n))
        for i, w in enumerate(w_nodes):

            def g(v, d_lo, d_hi):
                kernel = ml_matrix_at(alpha, alpha, spec.A0, d_hi, spec.series)
                inner = _eval_level(table, level - 1, spec, d_lo)
                return (d_hi ** (alpha - 1.0))[:, None, None] * np.matmul(
                    kernel @ spec.A1, inner
                )

            values[i] = log_integrate_u(g, 0.0, w, quad)
        e = level * alpha + beta_ - 1.0
        segments.append(_fit_values(xstd, values / (w_nodes**e)[:, None, None]))
    table.coefs.append(segments)


def _ensure_levels(spec: DelayedMLSpec, k: int, w_max: float) -> _LevelTable:
    z_need = max(w_max, 1e-300) ** spec.alpha
    seg_need = _segment_count(spec, w_max)
    with spec._lock:
        table = spec._cache.get("levels")
        if table is None or table.z_max < z_need or len(table.edges) - 1 < seg_need:
            table = _LevelTable(z_need * _DOMAIN_SLACK, spec.n, seg_need)
            spec._cache["levels"] = table
        while len(table.coefs) <= k:
            _build_level(table, len(table.coefs), spec)
        return table


def y_k_general(spec: DelayedMLSpec, k: int, t: float, s: float) -> np.ndarray:
    """Branch term Y_k(t, s h^k) along the recursive quadrature path."""
    if k < 0:
        raise DomainError(f"branch index k must be >= 0, got {k}")
    w = math.log(t) - math.log(s) - k * spec.log_h
    if not w > 0.0:
        raise SupportError(f"Y_{k} requires t > s h^{k} (got log-argument {w})")
    if k == 0:
        return e_ml_matrix(spec.alpha, spec.beta, spec.A0, w, spec.series)
    table = _ensure_levels(spec, k, w)
    return _eval_level(table, k, spec, np.array([w]))[0]


# ---------------------------------------------------------------------------
# permutable closed form and the scalar majorant series
# ---------------------------------------------------------------------------


def y_k_commuting(spec: DelayedMLSpec, k: int, t: float, s: float) -> np.ndarray:
    """Closed-form branch term for permutable (A0, A1)."""
    if not spec.is_commuting():
        raise NotCommutingError("A0 and A1 do not commute within tolerance")
    if k < 0:
        raise DomainError(f"branch index k must be >= 0, got {k}")
    w = math.log(t) - math.log(s) - k * spec.log_h
    if not w > 0.0:
        raise SupportError(f"Y_{k} requires t > s h^{k} (got log-argument {w})")
    alpha, beta_ = spec.alpha, spec.beta
    wa = w**alpha
    a0_norm = np.linalg.norm(spec.A0)
    term = np.eye(spec.n) * rgamma(k * alpha + beta_)
    total = term.copy()
    total_norm = np.linalg.norm(term)
    converged = False
    for nn in range(policy_terms := spec.series.max_terms):
        lg = gammaln(nn * alpha + k * alpha + beta_) - gammaln((nn + 1) * alpha + k * alpha + beta_)
        factor = wa * (nn + k + 1) / (nn + 1) * math.exp(lg)
        term = term @ spec.A0 * factor
        total = total + term
        total_norm = max(total_norm, np.linalg.norm(total))
        if (
            np.linalg.norm(term) < spec.series.rel_tol * max(total_norm, 1e-300)
            and a0_norm * factor < 1.0
        ):
            converged = True
            break
    if not converged:
        raise NonConvergenceError(
            f"commuting branch series did not converge within {policy_terms} terms"
        )
    return np.linalg.matrix_power(spec.A1, k) @ total * w ** (k * alpha + beta_ - 1.0)


def scalar_delay_series(
    a0: float,
    a1: float,
    alpha: float,
    beta_: float,
    ws,
    policy: SeriesPolicy = SeriesPolicy(),
) -> float:
    """Scalar double series sum_k a1^k sum_n C(n+k,k) a0^n w_k^(n a+k a+b-1)/Gamma(...).

    ``ws`` supplies the log-argument per branch k (len(ws) - 1 is the top
    branch); all terms are nonnegative, so this majorises the matrix kernel
    whenever a0, a1 dominate the matrix norms.
    """
    if a0 < 0.0 or a1 < 0.0:
        raise DomainError("scalar_delay_series requires nonnegative norms")
    total = 0.0
    for k, w in enumerate(ws):
        if w <= 0.0:
            if k * alpha + beta_ - 1.0 < 0.0:
                return math.inf
            continue
        wa = w**alpha
        term = (a1**k) * w ** (k * alpha + beta_ - 1.0) * rgamma(k * alpha + beta_)
        branch = term
        converged = a0 == 0.0
        for nn in range(policy.max_terms):
            if converged:
                break
            lg = gammaln(nn * alpha + k * alpha + beta_) - gammaln(
                (nn + 1) * alpha + k * alpha + beta_
            )
            factor = a0 * wa * (nn + k + 1) / (nn + 1) * math.exp(lg)
            term = term * factor
            branch += term
            if term < policy.rel_tol * max(branch, 1e-300) and factor < 1.0:
                converged = True
        if not converged:
            raise NonConvergenceError(
                f"scalar majorant series did not converge within {policy.max_terms} terms"
            )
        total += branch
    return total


def delayed_ml(spec: DelayedMLSpec, t: float, s: float, path: str = "auto") -> np.ndarray:
    """Full kernel Y(t, s): zero below the diagonal, identity on it, branch sum above.

    ``path`` selects the evaluation route: "auto" dispatches to the closed
    form when the commutator vanishes within tolerance, "commuting" forces
    it (raising NotCommutingError when invalid), "general" forces the
    recursive quadrature path.
    """
    if not (t > 0.0 and s > 0.0):
        raise DomainError(f"delayed_ml requires positive t, s, got ({t}, {s})")
    if path not in ("auto", "general", "commuting"):
        raise ValueError(f"unknown path {path!r}")
    n = spec.n
    if t < s:
        return np.zeros((n, n))
    if t == s:
        return np.eye(n)
    k = delay_index(t, s, spec.h)
    if k < 0:  # snapped onto t = s
        return np.eye(n)
    if path == "commuting" or (path == "auto" and spec.is_commuting()):
        terms = [y_k_commuting(spec, j, t, s) for j in range(k + 1)]
        return sum(terms)
    w0 = math.log(t) - math.log(s)
    out = e_ml_matrix(spec.alpha, spec.beta, spec.A0, w0, spec.series)
    if k == 0:
        return out
    table = _ensure_levels(spec, k, w0)
    for j in range(1, k + 1):
        out = out + _eval_level(table, j, spec, np.array([w0 - j * spec.log_h]))[0]
    return out


def norm_bound(spec: DelayedMLSpec, t: float, s: float) -> float:
    """Scalar majorant of ||Y(t, s)||_F built from ||A0||_F, ||A1||_F.

    Uses the true per-branch log-arguments (replacing them all by ln t is
    not monotone for exponents below zero) and scales the identity term by
    sqrt(n) so the bound covers the Frobenius norm.
    """
    if not (t > 0.0 and s > 0.0):
        raise DomainError(f"norm_bound requires positive t, s, got ({t}, {s})")
    if t < s:
        return 0.0
    p = delay_index(t, s, spec.h)
    if p < 0:
        return math.sqrt(spec.n) if spec.beta >= 1.0 else math.inf
    w0 = math.log(t) - math.log(s)
    ws = [w0 - j * spec.log_h for j in range(p + 1)]
    a0 = float(np.linalg.norm(spec.A0))
    a1 = float(np.linalg.norm(spec.A1))
    base = scalar_delay_series(a0, a1, spec.alpha, spec.beta, ws, spec.series)
    identity_extra = (math.sqrt(spec.n) - 1.0) * w0 ** (spec.beta - 1.0) * rgamma(spec.beta)
    return base + identity_extra
