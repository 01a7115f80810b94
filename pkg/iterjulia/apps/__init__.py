"""Configuration files, experiment pipelines and the command line."""

from iterjulia.apps.cli import main, reproduce_figures, run
from iterjulia.apps.config import ConfigError, ExperimentConfig, load_config

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "main",
    "reproduce_figures",
    "run",
]
