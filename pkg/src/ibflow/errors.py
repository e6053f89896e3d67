"""Exception types shared across the package."""


class ConfigError(Exception):
    """Invalid run configuration. Carries a list of per-field messages."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class SolverError(Exception):
    """Linear solver failed to converge within its iteration budget."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class BlowUpError(Exception):
    """Numerical instability sentinel: NaN/Inf or runaway velocity."""

    def __init__(self, message, step=None, time=None):
        super().__init__(message)
        self.step = step
        self.time = time


class DegenerateGeometryError(Exception):
    """Structure geometry collapsed (vanishing tangent or coincident points)."""


class ConditioningError(Exception):
    """RBF interpolation system is numerically singular for this shape parameter."""
