"""Exception types shared by all modules."""


class ValidationError(ValueError):
    """Input violates a structural invariant (non-primitive table, bad word, ...)."""


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")
        self.residual = residual
        self.iterations = iterations
