"""CLI and experiment infrastructure: configs, runs, comparisons, landscapes."""

from .config import ConfigError, ExperimentConfig, load_config_file, parse_seeds
from .experiment import (
    SeedOutcome,
    compare_experiments,
    landscape_slice,
    run_experiment,
    verify_outputs,
    write_landscape_csv,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "load_config_file",
    "parse_seeds",
    "SeedOutcome",
    "run_experiment",
    "compare_experiments",
    "landscape_slice",
    "write_landscape_csv",
    "verify_outputs",
]
