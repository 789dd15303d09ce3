"""Scenario ingestion, safety-envelope metrics, Monte Carlo runs and comparison."""

from .metrics import Metrics, RateEstimate, SafetyEnvelope, compute_metrics, wilson_interval
from .runner import (
    SEED_ENV,
    SimReport,
    compare_patterns,
    effective_seed,
    estimate_failure_rate,
    run_scenario,
    run_trial,
    trial_seed,
)
from .scenario import Scenario, build_pattern, default_pattern_config, load_scenario, scenario_from_dict

__all__ = [name for name in dir() if not name.startswith("_")]
