"""Moment relaxations of y_t = y_xx + eps y (1 - y) on the periodic unit interval."""

from ._rdsos import (
    ConfigError,
    Moments,
    compare_moments,
    export_sdpa,
    fd_solve,
    load_config,
    logistic_moments,
    pushforward_moments,
    run,
    solve,
    validate_config,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "Moments",
    "compare_moments",
    "export_sdpa",
    "fd_solve",
    "load_config",
    "logistic_moments",
    "pushforward_moments",
    "run",
    "solve",
    "validate_config",
]
