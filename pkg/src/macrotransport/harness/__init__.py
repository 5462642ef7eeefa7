"""Configuration, orchestration and command-line entry points."""

from .sweeps import (
    kr_duality_sweep,
    markov_sweep,
    parallel_map,
    random_hopping,
    random_protocol,
    speed_limit_sweep,
    theorem2_sweep,
    velocity_sweep,
)
from .config import ConfigError, ExperimentConfig, load_config, validate
from .run import RunReport, run
from .acceptance import CRITERIA, CriterionResult, run_criterion, run_suite
