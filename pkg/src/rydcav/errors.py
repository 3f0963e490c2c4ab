"""Exception types shared across the package."""


class ConfigError(ValueError):
    """One or more configuration invariants are violated.

    Carries the full list of violations so a caller can report them all at
    once instead of fixing them one by one.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class SingularParameterError(ArithmeticError):
    """A denominator in a closed-form expression is (numerically) zero."""


class SolverError(RuntimeError):
    """The self-consistency solver failed to locate a root."""


class IntegrationError(RuntimeError):
    """The ODE integrator aborted (step underflow or invariant breach)."""
