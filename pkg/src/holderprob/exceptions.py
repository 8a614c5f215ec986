class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConvergenceError(RuntimeError):
    """A numerical routine exhausted its budget before meeting its tolerance.

    ``best`` and ``residual`` carry the best value found and its stationarity
    residual when the routine has them.
    """

    def __init__(self, message, *, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class ConfigError(ValueError):
    """An experiment configuration failed validation."""


class SamplerError(RuntimeError):
    """A sampler hit its iteration cap (indicates a bug, never expected)."""


class DegenerateRatioWarning(UserWarning):
    """The Hölder ratio is exactly zero (disjoint supports)."""
