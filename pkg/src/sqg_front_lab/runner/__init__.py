"""Presets, configuration and result bundles for the command line."""

from .config import (ConfigError, ConfigNotFoundError, ConfigSchemaError, ExperimentConfig,
                     UnknownConfigKeyError, dump_config, from_mapping, parse_config)
from .presets import PRESETS, Criterion, PresetResult, run_preset

__all__ = [
    "ConfigError", "ConfigNotFoundError", "ConfigSchemaError", "UnknownConfigKeyError",
    "ExperimentConfig", "dump_config", "from_mapping", "parse_config",
    "PRESETS", "Criterion", "PresetResult", "run_preset",
]
