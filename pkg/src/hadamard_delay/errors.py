"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class PoleError(DomainError):
    """The gamma function was evaluated at a nonpositive integer."""


class SingularPointError(ArithmeticError):
    """Evaluation requested exactly at a non-removable singular point."""


class SupportError(ValueError):
    """Evaluation outside the support of a delay-branch kernel term."""


class NonConvergenceError(RuntimeError):
    """A truncated series hit its term budget before the stopping rule fired."""

    def __init__(self, message, terms_used=None, last_term=None):
        super().__init__(message)
        self.terms_used = terms_used
        self.last_term = last_term


class NotCommutingError(ValueError):
    """The commuting-pair closed form was requested for a non-commuting pair."""


class MissingDerivativeError(ValueError):
    """History declared analytic but no fractional derivative was supplied."""


class StepSizeError(ValueError):
    """Direct-solver step resolution below the supported minimum."""


class MaxIterError(RuntimeError):
    """Fixed-point iteration exhausted its budget; carries the last iterate."""

    def __init__(self, message, last=None, history=None):
        super().__init__(message)
        self.last = last
        self.history = history if history is not None else []


class PerturbationTooLargeError(ValueError):
    """Supplied perturbation exceeds the stated residual budget."""


class EvalError(ValueError):
    """A right-hand-side expression left its real domain during evaluation."""
