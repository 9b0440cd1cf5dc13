"""Exception types raised across the package."""


class AssumptionViolation(ValueError):
    """Inputs break a standing assumption of the method (graph or compressor)."""


class DivergenceError(RuntimeError):
    """Iterates became non-finite or exploded.

    ``trace`` holds the records produced before the failure, when available.
    """

    def __init__(self, k, message=None, trace=None):
        self.k = k
        self.trace = trace if trace is not None else []
        super().__init__(message or f"iterates diverged at iteration {k}")


class FitUnavailable(ValueError):
    """Too few usable points to fit a linear rate."""


class ConfigError(ValueError):
    """One or more configuration problems; ``errors`` lists all of them."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))
