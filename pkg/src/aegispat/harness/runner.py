"""Scenario execution, Monte Carlo estimation and pattern comparison."""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence

from ..core import SimulationError, TopologyError, Trace, derive_seed, run
from ..faults import FaultSpecError, bind_faults
from ..patterns import PatternError
from ..schemas import SCHEMA_VERSION
from .metrics import Metrics, RateEstimate, SafetyEnvelope, compute_metrics, merge, wilson_interval
from .scenario import Scenario, build_pattern, record_ports

SEED_ENV = "AEGISPAT_SEED"


def trial_seed(master: int, trial: int) -> int:
    return derive_seed(master, "trial", trial)


def effective_seed(scenario: Scenario, seed: Optional[int] = None) -> int:
    """Explicit seed, else ``$AEGISPAT_SEED``, else the scenario's seed."""
    if seed is not None:
        return int(seed)
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        try:
            return int(env)
        except ValueError:
            raise ValueError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return scenario.seed


@dataclass
class TrialResult:
    seed: int
    metrics: Metrics
    first_hazard: Optional[int]
    trace: Optional[Trace] = None


def run_trial(scenario: Scenario, seed: int, config: Optional[Mapping[str, Any]] = None,
              keep_trace: bool = False) -> TrialResult:
    built = build_pattern(scenario, seed, config)
    inst = built.instance
    injectors = bind_faults(inst.topology, built.faults, seed)
    trace = run(inst.topology, scenario.horizon, seed, injectors=injectors,
                record=None if keep_trace else record_ports(inst))
    envelope = SafetyEnvelope.from_dict(scenario.data["envelope"])
    metrics, hazards = compute_metrics(trace, envelope, inst.output, built.truths, built.profile.reference,
                                       inst.active, scenario.ticks_per_hour)
    return TrialResult(seed, metrics, hazards[0] if hazards else None, trace if keep_trace else None)


def _trial_job(args):
    data, seed, config = args
    r = run_trial(Scenario(data), seed, config)  # already validated by the parent
    return r.seed, r.metrics, r.first_hazard


@dataclass
class SimReport:
    scenario: str
    pattern: str
    seed: int
    trials: int
    horizon_ticks: int
    ticks_per_hour: int
    metrics: Metrics
    failure_rate: RateEstimate
    trial_seeds: list[int]
    first_hazards: list[Optional[int]]
    hazard_threshold: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def hazard_count(self) -> int:
        return self.metrics.hazards

    @property
    def exceeds_threshold(self) -> bool:
        return self.metrics.hazards > self.hazard_threshold

    def to_dict(self) -> dict:
        m = self.metrics
        return {
            "schema_version": SCHEMA_VERSION,
            "scenario": self.scenario,
            "pattern": self.pattern,
            "seed": self.seed,
            "trials": self.trials,
            "horizon_ticks": self.horizon_ticks,
            "ticks_per_hour": self.ticks_per_hour,
            "hazard_count": m.hazards,
            "loss_ticks": m.loss,
            "ok_ticks": m.ok,
            "total_ticks": m.ticks,
            "availability": m.availability,
            "backup_active": m.backup_active,
            "switch_events": m.switch_events,
            "overrides": m.overrides,
            "failure_rate_per_hour": self.failure_rate.to_dict(),
            "hazard_threshold": self.hazard_threshold,
            "trial_seeds": self.trial_seeds,
            "first_hazard_tick": self.first_hazards,
            **self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def run_scenario(
    scenario: Scenario,
    trials: Optional[int] = None,
    seed: Optional[int] = None,
    config: Optional[Mapping[str, Any]] = None,
    jobs: int = 1,
) -> tuple[SimReport, Trace]:
    """Run every trial and aggregate. Returns the report and the full trace
    of the first trial."""
    n = scenario.trials if trials is None else int(trials)
    if n < 1:
        raise ValueError("trials must be >= 1")
    master = effective_seed(scenario, seed)
    cfg = dict(config) if config is not None else scenario.pattern
    seeds = [trial_seed(master, i) for i in range(n)]
    first = run_trial(scenario, seeds[0], cfg, keep_trace=True)
    results = [(first.seed, first.metrics, first.first_hazard)]
    rest = seeds[1:]
    if jobs > 1 and len(rest) > 1:
        args = [(scenario.data, s, cfg) for s in rest]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results += list(pool.map(_trial_job, args, chunksize=max(1, len(args) // (4 * jobs))))
    else:
        for s in rest:
            r = run_trial(scenario, s, cfg)
            results.append((r.seed, r.metrics, r.first_hazard))
    total = merge(r[1] for r in results)
    report = SimReport(
        scenario=scenario.name,
        pattern=cfg["kind"],
        seed=master,
        trials=n,
        horizon_ticks=scenario.horizon,
        ticks_per_hour=scenario.ticks_per_hour,
        metrics=total,
        failure_rate=wilson_interval(total.failing_hours, total.hours),
        trial_seeds=seeds,
        first_hazards=[r[2] for r in results],
        hazard_threshold=scenario.hazard_threshold,
    )
    return report, first.trace


def estimate_failure_rate(scenario: Scenario, trials: int, seed: Optional[int] = None, jobs: int = 1) -> RateEstimate:
    """Fraction of operational-hour windows with at least one hazard."""
    report, _ = run_scenario(scenario, trials=trials, seed=seed, jobs=jobs)
    return report.failure_rate


# a kind that cannot be built, or cannot process the scenario's signals
CONSTRUCTION_ERRORS = (PatternError, TopologyError, FaultSpecError, ValueError, KeyError, SimulationError)


def compare_patterns(scenario: Scenario, kinds: Sequence[str], trials: Optional[int] = None,
                     seed: Optional[int] = None, jobs: int = 1) -> list[dict]:
    """One row per requested kind under identical seed, inputs and faults.
    A kind that cannot be built gets an ``error`` row; the rest still run."""
    rows = []
    for kind in kinds:
        try:
            config = scenario.pattern_config(kind)
            report, _ = run_scenario(scenario, trials=trials, seed=seed, config=config, jobs=jobs)
        except CONSTRUCTION_ERRORS as exc:
            rows.append({"kind": kind, "error": f"{type(exc).__name__}: {exc}"})
            continue
        d = report.to_dict()
        rows.append({
            "kind": kind,
            "hazard_count": d["hazard_count"],
            "loss_ticks": d["loss_ticks"],
            "availability": d["availability"],
            "backup_active": d["backup_active"],
            "switch_events": d["switch_events"],
            "overrides": d["overrides"],
            "failure_rate": d["failure_rate_per_hour"]["rate"],
        })
    return rows
