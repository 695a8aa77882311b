"""Exception and warning types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the requested function."""


class SupportError(ValueError):
    """An observation lies outside the support of the distribution."""

    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


class ConvergenceError(RuntimeError):
    """An iterative routine did not reach its tolerance.

    The best iterate found so far is kept in ``iterate``.
    """

    def __init__(self, message, iterate=None):
        super().__init__(message)
        self.iterate = iterate


class NumericalAnomaly(RuntimeError):
    """Numerically impossible outcome, e.g. an empty confidence set."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class QuadratureWarning(UserWarning):
    """Quadrature window truncated a non-negligible part of the integrand."""


class TruncationWarning(UserWarning):
    """A truncated series still carried non-negligible mass at its tail."""
