"""Exception types shared across the package."""


class NumericError(RuntimeError):
    """A computation produced a non-finite value (NaN/Inf) where a finite one is required."""


class ConfigError(ValueError):
    """An experiment configuration failed to parse or validate."""


class AllTrialsDivergedError(RuntimeError):
    """Every trial of a hyperparameter search diverged; no usable result exists."""
