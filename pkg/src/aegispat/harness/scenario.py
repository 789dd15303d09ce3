"""Scenario files: parsing, input streams, and pattern construction."""

from __future__ import annotations

import copy
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Mapping, Optional

from ..core import Port, Source, derive_seed
from ..faults import FaultSpec, fault_from_dict
from ..patterns import (
    DecisionTable,
    MonitorSpec,
    PassThrough,
    PatternError,
    PatternInstance,
    clamp_fn,
    make_active_monitor,
    make_backup_parallel,
    make_combined,
    make_function_modification,
    make_input_partitioning,
    make_rta,
    make_rta_ensemble,
    make_single_channel,
    make_tmr,
    make_value_override,
    monitor_from_dict,
)
from ..core import Role
from ..schemas import SCENARIO_SCHEMA, SchemaError, check, load_json
from ..surrogate import (
    BackupProfile,
    BackupSurrogate,
    ComplexSurrogate,
    DetectorSurrogate,
    OddRegion,
    SurrogateProfile,
)

Value = Any
Stream = Callable[[int, random.Random], Value]


@dataclass(frozen=True)
class Scenario:
    data: dict

    @property
    def name(self) -> str:
        return self.data.get("name", "scenario")

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    @property
    def horizon(self) -> int:
        return int(self.data["horizon_ticks"])

    @property
    def ticks_per_hour(self) -> int:
        return int(self.data.get("ticks_per_hour", 3600))

    @property
    def trials(self) -> int:
        return int(self.data.get("monte_carlo", {}).get("trials", 1))

    @property
    def hazard_threshold(self) -> int:
        return int(self.data.get("hazard_threshold", 0))

    @property
    def pattern(self) -> dict:
        return self.data["pattern"]

    def replace(self, **changes) -> "Scenario":
        data = copy.deepcopy(self.data)
        for key, value in changes.items():
            if key == "trials":
                data.setdefault("monte_carlo", {})["trials"] = value
            else:
                data[key] = value
        return scenario_from_dict(data)

    def pattern_config(self, kind: Optional[str] = None) -> dict:
        """Configuration for ``kind``: the scenario's own pattern, a
        ``compare`` entry, or a default built from the surrogate."""
        if kind is None or kind == self.pattern["kind"]:
            return self.pattern
        if kind in self.data.get("compare", {}):
            return {"kind": kind, **self.data["compare"][kind]}
        return default_pattern_config(kind, self)


def scenario_from_dict(data: Mapping[str, Any]) -> Scenario:
    check(data, SCENARIO_SCHEMA)
    data = copy.deepcopy(dict(data))
    try:
        SurrogateProfile.from_dict(data["surrogate"])
    except (ValueError, KeyError, TypeError) as exc:
        raise SchemaError("/surrogate", str(exc)) from exc
    return Scenario(data)


def load_scenario(path: str | Path) -> Scenario:
    return scenario_from_dict(load_json(path, SCENARIO_SCHEMA))


# -- input streams ----------------------------------------------------------


def _tuple(v, dim: Optional[int] = None):
    if isinstance(v, str):
        return v
    if isinstance(v, (list, tuple)):
        return tuple(float(x) for x in v)
    return (float(v),) * (dim or 1)


def make_stream(spec: Mapping[str, Any], dim: int) -> Stream:
    kind = spec["kind"]
    if kind == "script":
        values = [_tuple(v, dim) for v in spec["values"]]
        base: Stream = lambda t, rng: values[t % len(values)]  # noqa: E731
    elif kind == "constant":
        value = _tuple(spec["value"], dim)
        base = lambda t, rng: value  # noqa: E731
    elif kind == "uniform":
        low, high = _tuple(spec["low"], dim), _tuple(spec["high"], dim)
        pairs = list(zip(low, high))
        base = lambda t, rng: tuple(rng.uniform(lo, hi) for lo, hi in pairs)  # noqa: E731
    elif kind == "ramp":
        start, stop = _tuple(spec["start"], dim), _tuple(spec["stop"], dim)
        period = int(spec["period"])
        span = max(period - 1, 1)

        def base(t, rng):
            f = (t % period) / span
            return tuple(a + f * (b - a) for a, b in zip(start, stop))
    elif kind == "boxes":
        lo, hi = float(spec["low"]), float(spec["high"])
        smin, smax = float(spec.get("min_size", 1.0)), float(spec.get("max_size", 1.0))

        def base(t, rng):
            w, h = rng.uniform(smin, smax), rng.uniform(smin, smax)
            x, y = rng.uniform(lo, hi - w), rng.uniform(lo, hi - h)
            return (x, y, x + w, y + h)
    else:
        raise SchemaError("/input/kind", f"stream kind {kind!r} not valid here")
    excursions = [
        (frozenset(e.get("ticks", ())), tuple(e["interval"]) if "interval" in e else None, _tuple(e["value"], dim))
        for e in spec.get("excursions", ())
    ]
    if not excursions:
        return base

    def with_excursions(t, rng):
        value = base(t, rng)  # always drawn, so excursions never shift the stream
        for ticks, interval, forced in excursions:
            if t in ticks or (interval is not None and interval[0] <= t <= interval[1]):
                value = forced
        return value

    return with_excursions


def input_values(scenario: Scenario, seed: int) -> list:
    """Ground-truth input per tick (the input source replays this list)."""
    dim = int(scenario.data["surrogate"]["input_dim"])
    stream = make_stream(scenario.data["input"], dim)
    rng = random.Random(derive_seed(seed, "input"))
    return [stream(t, rng) for t in range(scenario.horizon)]


def _side_values(spec: Mapping[str, Any], truths: list, seed: int, name: str) -> list:
    if spec["kind"] == "from_input":
        dims = [int(d) for d in spec["dims"]]
        values = [tuple(v[d] for d in dims) for v in truths]
        for e in spec.get("excursions", ()):
            forced = _tuple(e["value"], len(dims))
            ticks = set(e.get("ticks", ()))
            if "interval" in e:
                ticks |= set(range(e["interval"][0], e["interval"][1] + 1))
            for t in ticks:
                if t < len(values):
                    values[t] = forced
        return values
    stream = make_stream(spec, 1)
    rng = random.Random(derive_seed(seed, name))
    return [stream(t, rng) for t in range(len(truths))]


def _scalar_risk(v):
    if isinstance(v, tuple) and len(v) == 1:
        return v[0]
    return v


def _replay(cid: str, values: list, transform=None) -> Source:
    if transform is None:
        return Source(id=cid, generator=lambda t, rng: values[t])
    return Source(id=cid, generator=lambda t, rng: transform(values[t]))


# -- pattern construction ---------------------------------------------------


@dataclass(frozen=True)
class Built:
    instance: PatternInstance
    truths: list
    profile: SurrogateProfile
    faults: tuple[FaultSpec, ...]


def default_pattern_config(kind: str, scenario: Scenario) -> dict:
    env = scenario.data["envelope"]
    tol = float(env.get("epsilon", 0.0)) if env["kind"] == "abs_deviation" else 0.0
    input_monitor = {"mode": "odd_conformance", "regions": "surrogate"}
    output_monitor = {"mode": "output_validity", "reference": True, "tolerance": tol}
    defaults = {
        "single_channel": {},
        "active_monitor": {"monitor": input_monitor, "action": "disconnect"},
        "backup_parallel": {"p_selftest": 0.0},
        "combined": {"variant": "input_monitor", "monitor": input_monitor},
        "rta": {"monitors": [output_monitor], "boundary": "ml_only"},
        "tmr": {"voter": "median"},
    }
    if kind not in defaults:
        raise PatternError(f"{kind} needs explicit configuration (add it under \"compare\")")
    return {"kind": kind, **defaults[kind]}


def _monitor(cfg: Mapping[str, Any], profile: SurrogateProfile) -> MonitorSpec:
    return monitor_from_dict(cfg, reference=profile.reference, odd=profile.odd)


def _regions(items) -> tuple[OddRegion, ...]:
    return tuple(OddRegion.from_dict(r) for r in items)


def _decision(cfg, monitors: int, alternatives: int):
    if cfg is None:
        return None
    return DecisionTable({tuple(e["trips"]): e["channel"] for e in cfg}, monitors, alternatives)


def build_pattern(scenario: Scenario, seed: int, config: Optional[Mapping[str, Any]] = None) -> Built:
    cfg = dict(config if config is not None else scenario.pattern)
    kind = cfg["kind"]
    data = scenario.data
    profile = SurrogateProfile.from_dict(data["surrogate"])
    reference = profile.reference
    truths = input_values(scenario, seed)
    source = _replay("input", truths)
    backup_profile = BackupProfile.from_dict(data.get("backup", {}))
    latency = int(cfg.get("latency", 1))
    hold_down = cfg.get("hold_down")
    if data["envelope"]["kind"] == "box_containment":
        # detection scenarios: every kind wraps the same detector
        detector = cfg.get("detector", scenario.pattern.get("detector", {}))
        complex_ = DetectorSurrogate(id="complex", **detector)
    else:
        complex_ = ComplexSurrogate(id="complex", profile=profile)

    def backup(cid="backup", prof=backup_profile):
        return BackupSurrogate(id=cid, profile=prof, reference=reference)

    if kind == "single_channel":
        inst = make_single_channel(complex_, source=source)
    elif kind == "active_monitor":
        inst = make_active_monitor(complex_, _monitor(cfg["monitor"], profile),
                                   action=cfg.get("action", "disconnect"), source=source)
    elif kind == "backup_parallel":
        inst = make_backup_parallel(complex_, backup(), p_selftest=float(cfg.get("p_selftest", 0.0)),
                                    latency=latency, hold_down=hold_down, source=source)
    elif kind == "combined":
        variant = cfg.get("variant", "input_monitor")
        independent = None
        if variant == "independent_channel":
            if "env" not in data:
                raise PatternError("independent_channel variant needs an \"env\" stream in the scenario")
            independent = _replay("env", _side_values(data["env"], truths, seed, "env"))
        inst = make_combined(complex_, _monitor(cfg["monitor"], profile), backup(), variant=variant,
                             independent=independent, latency=latency, hold_down=hold_down, source=source)
    elif kind == "rta":
        alts_cfg = cfg.get("alternatives") or [data.get("backup", {})]
        alternatives = [
            backup(f"alternative{k}" if len(alts_cfg) > 1 else "backup", BackupProfile.from_dict(a))
            for k, a in enumerate(alts_cfg)
        ]
        ens = cfg.get("ensemble")
        if ens is not None:
            n = int(ens["models"])
            models = [complex_] + [ComplexSurrogate(id=f"model{k}", profile=profile) for k in range(1, n)]
            pm = ens.get("per_model_monitor")
            per_model = [_monitor(pm, profile) if pm else None for _ in models]
            n_verdicts = (n if pm else 0) + 1
            inst = make_rta_ensemble(
                models, per_model, ens["combiner"], alternatives,
                decision=_decision(cfg.get("decision"), n_verdicts, len(alternatives)),
                spread_threshold=float(ens.get("spread_threshold", 0.0)),
                stamp_tolerance=int(ens.get("stamp_tolerance", 0)),
                latency=latency, hold_down=hold_down, source=source,
            )
        else:
            monitors = [_monitor(m, profile) for m in cfg["monitors"]]
            ia = None
            if "input_assurance" in cfg:
                ia = PassThrough(id="input_assurance", role=Role.PREPROCESS,
                                 fn=clamp_fn([tuple(r) for r in cfg["input_assurance"]["clamp"]]))
            inst = make_rta(
                complex_, monitors, alternatives,
                decision=_decision(cfg.get("decision"), len(monitors), len(alternatives)),
                boundary=cfg.get("boundary", "ml_only"), input_assurance=ia,
                latency=latency, hold_down=hold_down, source=source,
            )
    elif kind == "value_override":
        risk = None
        if cfg.get("adaptive"):
            if "risk" not in data:
                raise PatternError("adaptive value overriding needs a \"risk\" stream in the scenario")
            risk = _replay("risk", _side_values(data["risk"], truths, seed, "risk"), _scalar_risk)
        worst = cfg.get("worst_case")
        inst = make_value_override(
            complex_, mode=cfg.get("mode", "point"), threshold=float(cfg.get("threshold", 0.0)),
            worst_case=tuple(worst) if isinstance(worst, list) else worst,
            adaptive=[tuple(a) for a in cfg["adaptive"]] if cfg.get("adaptive") else None,
            distribution=cfg.get("distribution"), quantile=float(cfg.get("quantile", 0.05)),
            direction=cfg.get("direction", "lower"), source=source, risk=risk,
        )
    elif kind == "function_modification":
        if "training_iou" not in cfg:
            raise PatternError("function_modification needs training_iou")
        inst = make_function_modification(complex_, float(cfg["training_iou"]), source=source)
    elif kind == "input_partitioning":
        if "partitions" not in cfg:
            raise PatternError("input_partitioning needs partitions")
        parts = [_regions(p) for p in cfg["partitions"]]
        channels = [(complex_, parts[0])] + [
            (ComplexSurrogate(id=f"channel{k}", profile=profile), parts[k]) for k in range(1, len(parts))
        ]
        selector = _monitor(cfg.get("selector", {"mode": "odd_conformance", "regions": "surrogate"}), profile)
        inst = make_input_partitioning(channels, selector, source=source)
    elif kind == "tmr":
        replicas = [complex_] + [ComplexSurrogate(id=f"replica{k}", profile=profile) for k in (1, 2)]
        inst = make_tmr(replicas, voter=cfg.get("voter", "majority_exact"), source=source)
    else:
        raise PatternError(f"unknown pattern kind {kind!r}")
    faults = tuple(fault_from_dict(f) for f in data.get("faults", ()))
    return Built(inst, truths, profile, faults)


def record_ports(instance: PatternInstance) -> list[Port]:
    ports = [instance.output, instance.input]
    if instance.active is not None:
        ports.append(instance.active)
    return ports
