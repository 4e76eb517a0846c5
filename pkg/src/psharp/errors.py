"""Exception types shared across the package."""


class PsharpError(Exception):
    """Base class for all package errors."""


class DomainError(PsharpError, ValueError):
    """An argument lies outside the domain where the quantity exists."""


class PreconditionError(PsharpError, ValueError):
    """An operation was called with arguments violating its precondition."""


class TruncationSaturated(PsharpError):
    """The point lies in the untabulated tail ``[a_{n_cap}, a_inf)``.

    ``bound`` is the sup of every discarded bump, i.e. ``n_cap**(-theta*sigma)``.
    """

    def __init__(self, xi, bound):
        super().__init__(f"xi={xi!r} lies beyond the last tabulated block "
                         f"(sup of discarded bumps <= {bound:.3e})")
        self.xi = xi
        self.bound = bound


class NotDifferentiable(PsharpError):
    """Derivative requested at a transition point."""


class GridTooCoarse(PsharpError):
    """Two-resolution quadrature estimates disagree beyond tolerance."""

    def __init__(self, msg, estimate=None, discrepancy=None):
        super().__init__(msg)
        self.estimate = estimate
        self.discrepancy = discrepancy


class OutOfValidity(PsharpError):
    """Parameters fall outside the region where the exponent law is proven."""


class InsufficientSamples(PsharpError, ValueError):
    pass


class HypothesisViolated(PsharpError, ValueError):
    """A parameter hypothesis on (p, lambda, mu, epsilon) fails."""

    def __init__(self, inequality, detail=""):
        msg = f"violated: {inequality}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.inequality = inequality
