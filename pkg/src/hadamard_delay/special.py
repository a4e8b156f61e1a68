r"""Scalar gamma/beta and Mittag-Leffler series with controlled truncation.

The two-parameter Mittag-Leffler sum used throughout is

    E_{a,b}(A; x) = sum_k  A^k x^{a k} / Gamma(a k + b),

i.e. the entire part without the x^{b-1} prefactor; ``e_ml_matrix`` applies
the prefactor.  Truncation: a term is accepted as the last one once its
Frobenius norm drops below ``rel_tol`` times the partial sum *and* the
term-ratio bound ``|x|^a * Gamma(ka+b)/Gamma(ka+a+b) < 1`` certifies that the
tail is decreasing (a slightly stronger condition than comparing ``ka+b``
against ``\|A\| x^a``, which is not sufficient for a < 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NonConvergenceError, PoleError, SingularPointError

__all__ = [
    "SeriesPolicy",
    "as_square_matrix",
    "gamma",
    "gammaln",
    "rgamma",
    "beta",
    "ml_scalar",
    "ml_matrix",
    "ml_matrix_at",
    "e_ml_matrix",
]

#: overflow guard for gamma(); Gamma(171.7) already exceeds float64
GAMMA_MAX_ARG = 170.0

# Lanczos approximation, g = 607/128, 15 terms (Godfrey's coefficients).
_LANCZOS_G = 607.0 / 128.0
_LANCZOS_C = (
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class SeriesPolicy:
    """Truncation control for all Mittag-Leffler style series."""

    rel_tol: float = 1e-14
    max_terms: int = 2000

    def __post_init__(self):
        if not self.rel_tol > 0.0:
            raise DomainError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.max_terms < 1:
            raise DomainError(f"max_terms must be >= 1, got {self.max_terms}")


DEFAULT_SERIES = SeriesPolicy()


def as_square_matrix(entries) -> np.ndarray:
    """Validate and return a finite square matrix as a float ndarray."""
    a = np.array(entries, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DomainError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("matrix entries must be finite")
    return a


def _sinpi(x: float) -> float:
    # sin(pi*x) with the argument reduced exactly modulo 2
    return math.sin(math.pi * math.remainder(x, 2.0))


def gammaln(x: float) -> float:
    """log Gamma(x) for x > 0 (Lanczos sum, ~1e-15 relative)."""
    if not x > 0.0:
        raise DomainError(f"gammaln requires x > 0, got {x}")
    if x < 0.5:
        # recurrence keeps the Lanczos sum away from its pole at z = -1
        return gammaln(x + 1.0) - math.log(x)
    z = x - 1.0
    acc = _LANCZOS_C[0]
    for k in range(1, len(_LANCZOS_C)):
        acc += _LANCZOS_C[k] / (z + k)
    t = z + _LANCZOS_G + 0.5
    return _LOG_SQRT_2PI + (z + 0.5) * math.log(t) - t + math.log(acc)


def _gamma_positive(x: float) -> float:
    # Lanczos product with the power split in two so Gamma(170) stays in range;
    # the exponent cancellation (-t + (x-0.5) ln t is flat in t) keeps this at
    # a few ulp instead of the |ln Gamma| * eps amplification of exp(gammaln).
    if x == math.floor(x) and x <= 171.0:
        return float(math.factorial(int(x) - 1))
    z = x - 1.0
    acc = _LANCZOS_C[0]
    for k in range(1, len(_LANCZOS_C)):
        acc += _LANCZOS_C[k] / (z + k)
    t = z + _LANCZOS_G + 0.5
    half_pow = t ** (0.5 * (z + 0.5))
    return half_pow * math.exp(-t) * half_pow * math.sqrt(2.0 * math.pi) * acc


def gamma(x: float) -> float:
    """Gamma function on the real line, reflection formula for x < 0.5."""
    if not math.isfinite(x):
        raise DomainError(f"gamma requires a finite argument, got {x}")
    if x <= 0.0 and x == math.floor(x):
        raise PoleError(f"gamma has a pole at {x}")
    if abs(x) > GAMMA_MAX_ARG:
        raise OverflowError(f"gamma argument |{x}| exceeds {GAMMA_MAX_ARG}")
    if x >= 0.5:
        return _gamma_positive(x)
    s = _sinpi(x)
    return math.pi / (s * _gamma_positive(1.0 - x))


def rgamma(x: float) -> float:
    """1/Gamma(x); zero at the poles, safe for nonpositive arguments."""
    if x > 0.0:
        return math.exp(-gammaln(x))
    if x == math.floor(x):
        return 0.0
    if x < -GAMMA_MAX_ARG:
        raise OverflowError(f"rgamma argument {x} exceeds the supported range")
    return _sinpi(x) * math.exp(gammaln(1.0 - x)) / math.pi


def beta(a: float, b: float) -> float:
    """Euler beta via the Gamma identity; requires a, b > 0."""
    if not (a > 0.0 and b > 0.0):
        raise DomainError(f"beta requires positive arguments, got ({a}, {b})")
    return math.exp(gammaln(a) + gammaln(b) - gammaln(a + b))


def _check_orders(alpha: float, beta_: float) -> None:
    if not alpha > 0.0:
        raise DomainError(f"series order alpha must be positive, got {alpha}")
    if not beta_ > 0.0:
        raise DomainError(f"series parameter beta must be positive, got {beta_}")


def ml_scalar(
    alpha: float,
    beta_: float,
    z: float,
    policy: SeriesPolicy = DEFAULT_SERIES,
    with_terms: bool = False,
):
    """Scalar Mittag-Leffler value E_{alpha,beta}(z) = sum z^k / Gamma(k*alpha+beta)."""
    _check_orders(alpha, beta_)
    if not math.isfinite(z):
        raise DomainError(f"ml_scalar requires finite z, got {z}")
    term = rgamma(beta_)
    total = term
    comp = 0.0  # Kahan carry; the series alternates for z < 0
    az = abs(z)
    for k in range(1, policy.max_terms + 1):
        lg_ratio = gammaln(k * alpha - alpha + beta_) - gammaln(k * alpha + beta_)
        ratio = math.exp(lg_ratio)
        term = term * z * ratio
        yk = term - comp
        t_new = total + yk
        comp = (t_new - total) - yk
        total = t_new
        decreasing = az * math.exp(gammaln(k * alpha + beta_) - gammaln(k * alpha + alpha + beta_)) < 1.0
        if abs(term) < policy.rel_tol * max(abs(total), 1e-300) and decreasing:
            return (total, k + 1) if with_terms else total
    raise NonConvergenceError(
        f"ml_scalar did not converge within {policy.max_terms} terms",
        terms_used=policy.max_terms,
        last_term=term,
    )


def _ml_coefficients(alpha, beta_, A, xmax, policy):
    """Matrix coefficients C_k = A^k / Gamma(k*alpha+beta) until the stop rule at xmax."""
    n = A.shape[0]
    coeffs = [np.eye(n) * rgamma(beta_)]
    xa = xmax**alpha
    total_norm = np.linalg.norm(coeffs[0])
    for k in range(1, policy.max_terms + 1):
        ratio = math.exp(gammaln(k * alpha - alpha + beta_) - gammaln(k * alpha + beta_))
        coeffs.append(coeffs[-1] @ A * ratio)
        term_norm = np.linalg.norm(coeffs[-1]) * xa**k
        total_norm = max(total_norm, term_norm)
        decreasing = (
            np.linalg.norm(A) * xa
            * math.exp(gammaln(k * alpha + beta_) - gammaln(k * alpha + alpha + beta_))
            < 1.0
        )
        if term_norm < policy.rel_tol * max(total_norm, 1e-300) and decreasing:
            return np.array(coeffs)
    raise NonConvergenceError(
        f"ml_matrix did not converge within {policy.max_terms} terms",
        terms_used=policy.max_terms,
    )


def ml_matrix_at(
    alpha: float,
    beta_: float,
    A: np.ndarray,
    xs: np.ndarray,
    policy: SeriesPolicy = DEFAULT_SERIES,
) -> np.ndarray:
    """Vectorised E_{alpha,beta}(A; x) over an array of nonnegative x values."""
    _check_orders(alpha, beta_)
    A = as_square_matrix(A)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if np.any(xs < 0.0):
        raise DomainError("ml_matrix_at requires x >= 0")
    coeffs = _ml_coefficients(alpha, beta_, A, float(xs.max(initial=0.0)), policy)
    K = coeffs.shape[0]
    with np.errstate(divide="ignore"):
        # x^(alpha*k); 0^0 = 1 by convention of the k = 0 term
        powers = np.where(
            xs[:, None] > 0.0,
            xs[:, None] ** (alpha * np.arange(K)[None, :]),
            np.where(np.arange(K)[None, :] == 0, 1.0, 0.0),
        )
    return np.einsum("mk,kij->mij", powers, coeffs)


def ml_matrix(
    alpha: float,
    beta_: float,
    A: np.ndarray,
    x: float,
    policy: SeriesPolicy = DEFAULT_SERIES,
) -> np.ndarray:
    """Matrix Mittag-Leffler E-part at a single x >= 0."""
    return ml_matrix_at(alpha, beta_, A, np.array([float(x)]), policy)[0]


def e_ml_matrix(
    alpha: float,
    beta_: float,
    A: np.ndarray,
    x: float,
    policy: SeriesPolicy = DEFAULT_SERIES,
) -> np.ndarray:
    """x^(beta-1) * E_{alpha,beta}(A; x), the weighted Mittag-Leffler kernel."""
    x = float(x)
    if x < 0.0:
        raise DomainError(f"e_ml_matrix requires x >= 0, got {x}")
    if x == 0.0:
        if beta_ < 1.0:
            raise SingularPointError("e_ml_matrix is singular at x = 0 for beta < 1")
        if beta_ == 1.0:
            return ml_matrix(alpha, beta_, A, 0.0, policy)
        return np.zeros_like(as_square_matrix(A))
    return x ** (beta_ - 1.0) * ml_matrix(alpha, beta_, A, x, policy)
