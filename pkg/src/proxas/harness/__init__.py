"""Experiment harness: data I/O, configuration, runs, grid search, CLI."""
from .config import ConfigError, ExperimentConfig, RunSpec, load_config, parse_config_text
from .experiment import grid_search, run_experiment
from .libsvm import LibSVMError, parse_libsvm, write_libsvm
from .synthetic import SyntheticSpec, gen_synthetic

__all__ = [
    "ConfigError", "ExperimentConfig", "RunSpec", "load_config", "parse_config_text",
    "grid_search", "run_experiment", "LibSVMError", "parse_libsvm", "write_libsvm",
    "SyntheticSpec", "gen_synthetic",
]
