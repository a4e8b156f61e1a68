"""Problem data types shared by the solvers and the validation oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .delayed_ml import DelayedMLSpec
from .errors import DomainError, MissingDerivativeError

__all__ = ["HistorySpec", "LinearDelayProblem", "SemilinearProblem", "Trajectory"]


@dataclass(frozen=True, eq=False)
class HistorySpec:
    """History function phi on (1/h, 1] and its fractional derivative.

    ``phi_frac_deriv`` is the Hadamard derivative of order alpha based at
    (1/h)+.  In "analytic" mode it must be supplied; in "numeric-fallback"
    mode the solvers differintegrate phi numerically.  ``singular_exponent``
    declares the leading power of ln(t h) of (D^alpha phi - A0 phi) near
    t = 1/h, which the history quadrature absorbs into its endpoint weight.
    """

    phi: Callable[[float], np.ndarray]
    phi_frac_deriv: Optional[Callable[[float], np.ndarray]] = None
    mode: str = "analytic"
    singular_exponent: float = 0.0

    def __post_init__(self):
        if self.mode not in ("analytic", "numeric-fallback"):
            raise DomainError(f"unknown history mode {self.mode!r}")
        if self.mode == "analytic" and self.phi_frac_deriv is None:
            raise MissingDerivativeError(
                "analytic history mode requires phi_frac_deriv; "
                "use mode='numeric-fallback' to differintegrate phi numerically"
            )
        if not self.singular_exponent > -1.0:
            raise DomainError("history singular_exponent must exceed -1")


@dataclass(frozen=True, eq=False)
class LinearDelayProblem:
    """Linear Hadamard fractional delay problem on (1, h^l].

    Normalisation: the history lives on (1/h, 1], the weighted initial
    value ``a`` is taken at (1/h)+, and the equation runs on (1, T] with
    T = h^l.  The kernel spec must use beta = alpha.
    """

    spec: DelayedMLSpec
    a: np.ndarray
    history: HistorySpec
    forcing: Optional[Callable[[float], np.ndarray]] = None
    horizon_exponent: int = 1
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.spec.beta != self.spec.alpha:
            raise DomainError("solution kernels require beta = alpha in the spec")
        if self.horizon_exponent < 1:
            raise DomainError(f"horizon exponent l must be >= 1, got {self.horizon_exponent}")
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        if a.shape != (self.spec.n,):
            raise DomainError(f"initial vector has shape {a.shape}, expected ({self.spec.n},)")
        if not np.all(np.isfinite(a)):
            raise DomainError("initial vector must be finite")
        object.__setattr__(self, "a", a)

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def T(self) -> float:
        return self.spec.h**self.horizon_exponent

    def forcing_or_zero(self, t: float) -> np.ndarray:
        if self.forcing is None:
            return np.zeros(self.n)
        return np.atleast_1d(np.asarray(self.forcing(t), dtype=float))


@dataclass(frozen=True, eq=False)
class SemilinearProblem:
    """Semilinear problem: the linear skeleton plus a Lipschitz right side.

    ``rhs(t, y)`` replaces the linear forcing (the ``forcing`` field of the
    embedded linear problem is ignored).  ``lipschitz`` and ``affine_bound``
    are the constants L_f, L_2 of ||f(t,y)|| <= L_f ||y|| + L_2, and
    ``gamma_weight`` is the exponent of the weighted sup norm, below alpha.
    """

    linear: LinearDelayProblem
    rhs: Callable[[float, np.ndarray], np.ndarray]
    lipschitz: float = 0.0
    affine_bound: float = 0.0
    gamma_weight: float = 0.0

    def __post_init__(self):
        if self.lipschitz < 0.0 or self.affine_bound < 0.0:
            raise DomainError("Lipschitz constants must be nonnegative")
        if not 0.0 <= self.gamma_weight < self.linear.spec.alpha:
            raise DomainError(
                f"gamma_weight must lie in [0, alpha), got {self.gamma_weight} "
                f"with alpha = {self.linear.spec.alpha}"
            )

    @property
    def n(self) -> int:
        return self.linear.n

    @property
    def T(self) -> float:
        return self.linear.T


@dataclass(eq=False)
class Trajectory:
    """Sampled solution on a strictly increasing grid, with a weighted norm tag."""

    grid: np.ndarray
    values: np.ndarray
    gamma_weight: float = 0.0

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.grid.ndim != 1 or self.values.shape[0] != self.grid.shape[0]:
            raise DomainError(
                f"grid/value shapes disagree: {self.grid.shape} vs {self.values.shape}"
            )
        if self.grid.size and not np.all(np.diff(self.grid) > 0.0):
            raise DomainError("trajectory grid must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("trajectory values must be finite")
        if not 0.0 <= self.gamma_weight < 1.0:
            raise DomainError(f"gamma_weight must lie in [0, 1), got {self.gamma_weight}")

    @property
    def n(self) -> int:
        return self.values.shape[1] if self.values.ndim > 1 else 1

    def weighted_sup(self) -> float:
        """sup over grid points t > 1 of (ln t)^gamma ||y(t)||_2."""
        mask = self.grid > 1.0
        if not np.any(mask):
            return 0.0
        norms = np.linalg.norm(np.atleast_2d(self.values[mask]), axis=1)
        return float(np.max(np.log(self.grid[mask]) ** self.gamma_weight * norms))

    def interpolator(self):
        """Monotone piecewise-cubic interpolant of the values in ln t."""
        from scipy.interpolate import PchipInterpolator

        return PchipInterpolator(np.log(self.grid), self.values, axis=0, extrapolate=True)
