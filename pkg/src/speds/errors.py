"""Exception types shared across the package."""


class InvalidInput(ValueError):
    """A parameter violates a documented precondition."""


class UnsupportedInput(ValueError):
    """Physically meaningful but outside what the solver supports (e.g. gain media)."""


class NumericalFailure(RuntimeError):
    """A quadrature or iteration failed to converge; the message carries diagnostics."""
