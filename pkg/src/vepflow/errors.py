"""Error types shared across the solver stack."""


class VepflowError(Exception):
    """Base class for all package errors."""


class ConfigError(VepflowError):
    """Configuration rejected at validation time.

    Carries a stable machine-readable code so tests and clients can match on
    the violated constraint rather than on message wording.
    """

    def __init__(self, code: str, message: str):
        self.code = code
        self.message = message
        super().__init__(f"[{code}] {message}")


class NewtonNonConvergence(VepflowError):
    """Phase-field Newton iteration failed to converge."""

    def __init__(self, message: str, iterations: int = -1, residual: float = float("nan")):
        self.iterations = iterations
        self.residual = residual
        super().__init__(message)


class StressNonConvergence(VepflowError):
    """Stress fixed-point iteration failed to converge."""

    def __init__(self, message: str, iterations: int = -1, residual: float = float("nan")):
        self.iterations = iterations
        self.residual = residual
        super().__init__(message)


class OuterNonConvergence(VepflowError):
    """Coupled Picard iteration for one time step failed to converge."""

    def __init__(self, message: str, iterations: int = -1, update: float = float("nan")):
        self.iterations = iterations
        self.update = update
        super().__init__(message)
