"""Exception types shared across the package.

Numerical routines fail loudly: a scalar estimate at or below the floor, a
degenerate constraint, or an ill-conditioned Jacobian raises instead of
silently flipping signs or regularizing.
"""

from __future__ import annotations

# Rule evaluation requires scalar estimates (lambda, sigma, rho) and, where
# norms divide, vector norms to stay above this floor.
SCALAR_FLOOR = 1e-8


class DimensionError(ValueError):
    """Input has the wrong shape (non-square, mismatched, too large)."""


class SymmetryError(ValueError):
    """Matrix required to be symmetric is not, beyond tolerance."""


class ConvergenceError(RuntimeError):
    """An iterative solver exhausted its iteration budget."""


class GuardedScalarError(ValueError):
    """A guarded scalar estimate fell to or below the floor."""

    def __init__(self, name: str, value: float):
        self.name = name
        self.value = value
        super().__init__(
            f"scalar estimate {name}={value!r} is at or below the floor {SCALAR_FLOOR}"
        )


class ConstraintDegeneracyError(ValueError):
    """Vector is (near-)parallel to the constant-sum plane: 1'v ~ 0."""


class SingularJacobianError(RuntimeError):
    """Jacobian too ill-conditioned to invert for a Newton step."""

    def __init__(self, cond: float):
        self.cond = cond
        super().__init__(f"Jacobian condition number {cond:.3e} exceeds 1e12")


class DivergenceError(RuntimeError):
    """Integration or training left the finite range."""

    def __init__(self, step: int, norm: float):
        self.step = step
        self.norm = norm
        super().__init__(f"state norm {norm:.3e} exceeded 1e12 at step {step}")


class UnsupportedRuleError(ValueError):
    """Rule kind not available in the requested mode."""


class StationarityError(ValueError):
    """Input state violates a required stationarity equation."""

    def __init__(self, equation: str, residual: float):
        self.equation = equation
        self.residual = residual
        super().__init__(
            f"stationarity equation {equation} violated (residual {residual:.3e})"
        )


class OrientationError(ValueError):
    """Analysis requires min(m, n) = n; transpose and swap roles instead."""


class ConfigError(ValueError):
    """Experiment configuration is malformed or inconsistent."""


def require_scalar(name: str, value: float) -> float:
    """Return ``value`` if it exceeds the scalar floor, else raise."""
    if not value > SCALAR_FLOOR:
        raise GuardedScalarError(name, float(value))
    return float(value)
