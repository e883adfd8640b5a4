class DivergenceError(ArithmeticError):
    """Integration produced a non-finite state."""

    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"non-finite state at integrator step {step}")


class NonConvergenceError(RuntimeError):
    """Equilibrium search ran out of time before meeting its tolerance."""

    def __init__(self, residual: float, t: float):
        self.residual = residual
        self.t = t
        super().__init__(f"no equilibrium within t={t:g}; last residual {residual:.3e}")


class SingularCoefficientError(ArithmeticError):
    pass


class GradientError(ArithmeticError):
    """Sensitivity matrix is singular, i.e. the stability constraints are badly violated."""
