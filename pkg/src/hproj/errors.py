"""Exception types shared across the package."""


class HprojError(Exception):
    """Base class for all errors raised by hproj."""


class DomainError(HprojError, ValueError):
    """A point or vector is outside the domain where it is defined."""


class TruncationError(HprojError):
    """A geodesic left the domain box before reaching the requested length."""

    def __init__(self, t_exit: float, message: str = ""):
        self.t_exit = float(t_exit)
        super().__init__(message or f"geodesic left the domain box at t={self.t_exit:.6g}")


class ConvergenceError(HprojError):
    """An iterative solve stopped without meeting its tolerance."""

    def __init__(self, residual: float, message: str = ""):
        self.residual = float(residual)
        super().__init__(message or f"solver did not converge (best residual {self.residual:.3g})")


class ExtentError(HprojError):
    """The projection foot lies at the end of the parametrized line segment."""


class BudgetError(HprojError):
    """A requested construction exceeds its size budget."""


class FitError(HprojError, ValueError):
    """A regression has no well-defined solution."""


class ConfigError(HprojError, ValueError):
    """Invalid configuration value; ``field`` names the offending key path."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
