"""Constructors that assemble a topology for each architectural pattern."""

from __future__ import annotations

import dataclasses
import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Mapping, Optional, Sequence, Union

from ..core import Component, Edge, Port, Role, Source, Topology, build_topology, edge
from ..geometry import InvalidIoUBound
from ..surrogate import OddRegion
from .blocks import (
    ConsistencyCheck,
    Demux,
    Gate,
    Mux,
    PassThrough,
    SafetyPostprocess,
    Switch,
    ValueOverride,
    Voter,
)
from .monitors import MonitorMode, MonitorSpec, monitor_component


class PatternKind(str, Enum):
    SINGLE_CHANNEL = "single_channel"
    ACTIVE_MONITOR = "active_monitor"
    BACKUP_PARALLEL = "backup_parallel"
    COMBINED = "combined"
    RTA = "rta"
    VALUE_OVERRIDE = "value_override"
    FUNCTION_MODIFICATION = "function_modification"
    INPUT_PARTITIONING = "input_partitioning"
    TMR = "tmr"


class PatternError(ValueError):
    pass


class IncompatibleMonitorMode(PatternError):
    pass


class IncompleteDecisionTable(PatternError):
    pass


class PartitionOverlap(PatternError):
    pass


class PartitionGap(PatternError):
    pass


@dataclass(frozen=True, eq=False)
class PatternInstance:
    kind: PatternKind
    topology: Topology
    roles: dict[str, Role]
    output: Port
    options: dict[str, Any] = field(default_factory=dict)
    input: Port = ("input", "x")
    # switch "active" port, when the pattern has a channel switch
    active: Optional[Port] = None
    decision: Optional["DecisionTable"] = None

    def __post_init__(self):
        for cid, comp in self.topology.components.items():
            if comp.role not in (Role.SOURCE, Role.SINK) and cid not in self.roles:
                raise PatternError(f"role map misses component {cid!r}")
        if not self.topology.has_port(self.output):
            raise PatternError(f"pattern output {self.output} is not a port")

    def ids_with(self, *roles: Role) -> list[str]:
        return [cid for cid, r in self.roles.items() if r in roles]


def _instance(
    kind, comps, edges, output, options=None, active=None, source_id="input", decision=None
) -> PatternInstance:
    topo = build_topology(comps, edges)
    roles = {c.id: c.role for c in comps if c.role not in (Role.SOURCE, Role.SINK)}
    return PatternInstance(
        kind=PatternKind(kind),
        topology=topo,
        roles=roles,
        output=output,
        options=dict(options or {}),
        input=(source_id, "x"),
        active=active,
        decision=decision,
    )


def _source(source: Optional[Source]) -> Source:
    return source if source is not None else Source(id="input")


def _with_role(comp: Component, role: Role) -> Component:
    return comp if comp.role is role else dataclasses.replace(comp, role=role)


def _require_input_mode(spec: MonitorSpec, where: str) -> None:
    if not spec.observes_inputs:
        raise IncompatibleMonitorMode(f"{where} needs an input-observing monitor, got {spec.mode.value}")


def _monitor_edges(mid: str, spec: MonitorSpec, input_port: str, output_port: str) -> list[Edge]:
    """Wire a monitor to whatever its mode observes."""
    if spec.observes_inputs:
        return [edge(input_port, f"{mid}.obs")]
    wires = [edge(output_port, f"{mid}.obs")]
    if spec.reference is not None:
        wires.append(edge(input_port, f"{mid}.ctx"))
    return wires


# -- established aviation patterns -----------------------------------------


def make_single_channel(complex: Component, source: Optional[Source] = None) -> PatternInstance:
    src = _source(source)
    cx = _with_role(complex, Role.COMPLEX)
    return _instance(
        PatternKind.SINGLE_CHANNEL,
        [src, cx],
        [edge(f"{src.id}.x", f"{cx.id}.x")],
        (cx.id, "y"),
        source_id=src.id,
    )


def make_active_monitor(
    complex: Component,
    monitor: MonitorSpec,
    action: str = "disconnect",
    source: Optional[Source] = None,
) -> PatternInstance:
    _require_input_mode(monitor, "active-monitor pattern")
    src = _source(source)
    cx = _with_role(complex, Role.COMPLEX)
    mon = monitor_component("monitor", monitor)
    gate = Gate(id="gate", action=action)
    edges = [
        edge(f"{src.id}.x", f"{cx.id}.x"),
        edge(f"{src.id}.x", "monitor.obs"),
        edge(f"{cx.id}.y", "gate.y"),
        edge("monitor.trip", "gate.trip"),
    ]
    return _instance(
        PatternKind.ACTIVE_MONITOR, [src, cx, mon, gate], edges, ("gate", "y"),
        {"action": action, "monitor_mode": monitor.mode.value}, source_id=src.id,
    )


def make_backup_parallel(
    complex: Component,
    backup: Component,
    p_selftest: float = 0.0,
    latency: int = 1,
    hold_down: Optional[int] = None,
    source: Optional[Source] = None,
) -> PatternInstance:
    """The complex channel self-reports failure; the switch then engages the
    backup. Undetected erroneous outputs pass straight through."""
    if not 0.0 <= p_selftest <= 1.0:
        raise PatternError(f"p_selftest {p_selftest} outside [0, 1]")
    src = _source(source)
    cx = _with_role(complex, Role.COMPLEX)
    if hasattr(cx, "p_selftest"):
        cx = dataclasses.replace(cx, p_selftest=p_selftest)
    bk = _with_role(backup, Role.BACKUP)
    sw = Switch(id="switch", channels=2, verdicts=0, self_report=True, latency=latency, hold_down=hold_down)
    edges = [
        edge(f"{src.id}.x", f"{cx.id}.x"),
        edge(f"{src.id}.x", f"{bk.id}.x"),
        edge(f"{cx.id}.y", "switch.ch0"),
        edge(f"{bk.id}.y", "switch.ch1"),
    ]
    return _instance(
        PatternKind.BACKUP_PARALLEL, [src, cx, bk, sw], edges, ("switch", "y"),
        {"p_selftest": p_selftest, "latency": latency, "hold_down": hold_down},
        active=("switch", "active"), source_id=src.id,
    )


COMBINED_VARIANTS = ("input_monitor", "output_monitor", "independent_channel")


def make_combined(
    complex: Component,
    monitor: MonitorSpec,
    backup: Component,
    variant: str = "input_monitor",
    independent: Optional[Source] = None,
    latency: int = 1,
    hold_down: Optional[int] = None,
    source: Optional[Source] = None,
) -> PatternInstance:
    """Active monitor driving a switch to a conventional backup.

    ``input_monitor`` watches the complex function's inputs,
    ``output_monitor`` judges its outputs, and ``independent_channel``
    checks operating-domain conformance on a separate sensing stream.
    """
    if variant not in COMBINED_VARIANTS:
        raise PatternError(f"unknown combined variant {variant!r}")
    if variant == "output_monitor":
        if monitor.mode is not MonitorMode.OUTPUT_VALIDITY:
            raise IncompatibleMonitorMode("output_monitor variant needs an output_validity monitor")
    else:
        _require_input_mode(monitor, f"{variant} variant")
    if variant == "independent_channel" and independent is None:
        raise PatternError("independent_channel variant needs an independent source component")

    src = _source(source)
    cx = _with_role(complex, Role.COMPLEX)
    bk = _with_role(backup, Role.BACKUP)
    mon = monitor_component("monitor", monitor)
    sw = Switch(id="switch", channels=2, verdicts=1, latency=latency, hold_down=hold_down)
    comps: list[Component] = [src]
    observed = f"{src.id}.x"
    if variant == "independent_channel":
        ind = _with_role(independent, Role.SOURCE)
        comps.append(ind)
        observed = f"{ind.id}.{ind.outputs[0]}"
    comps += [cx, bk, mon, sw]
    edges = [
        edge(f"{src.id}.x", f"{cx.id}.x"),
        edge(f"{src.id}.x", f"{bk.id}.x"),
        edge(f"{cx.id}.y", "switch.ch0"),
        edge(f"{bk.id}.y", "switch.ch1"),
        edge("monitor.trip", "switch.v0"),
    ]
    if variant == "independent_channel":
        edges.append(edge(observed, "monitor.obs"))
    else:
        edges += _monitor_edges("monitor", monitor, f"{src.id}.x", f"{cx.id}.y")
    return _instance(
        PatternKind.COMBINED, comps, edges, ("switch", "y"),
        {"variant": variant, "monitor_mode": monitor.mode.value, "latency": latency, "hold_down": hold_down},
        active=("switch", "active"), source_id=src.id,
    )


# -- runtime assurance ------------------------------------------------------


Channel = Union[str, int]


class DecisionTable:
    """Total map from monitor-trip vectors to a channel.

    Channels are ``"primary"`` or an alternative index ``k``; internally
    the switch numbers them ``0`` and ``k + 1``.
    """

    def __init__(self, entries: Mapping[tuple[bool, ...], Channel], monitors: int, alternatives: int):
        self.monitors = monitors
        self.alternatives = alternatives
        table: dict[tuple[bool, ...], int] = {}
        for key, channel in entries.items():
            key = tuple(bool(k) for k in key)
            if len(key) != monitors:
                raise IncompleteDecisionTable(f"entry {key} does not cover {monitors} monitors")
            table[key] = self._channel_index(channel)
        missing = [k for k in itertools.product((False, True), repeat=monitors) if k not in table]
        if missing:
            raise IncompleteDecisionTable(f"no decision for verdict combinations {missing}")
        self._table = table

    def _channel_index(self, channel: Channel) -> int:
        if channel == "primary":
            return 0
        k = int(channel)
        if not 0 <= k < self.alternatives:
            raise IncompleteDecisionTable(f"decision names unknown alternative {channel!r}")
        return k + 1

    @classmethod
    def any_trip(cls, monitors: int, alternatives: int = 1, alternative: int = 0) -> "DecisionTable":
        entries = {
            key: (alternative if any(key) else "primary")
            for key in itertools.product((False, True), repeat=monitors)
        }
        return cls(entries, monitors, alternatives)

    def __call__(self, trips: tuple[bool, ...]) -> int:
        return self._table[trips]

    def channel(self, trips: Sequence[bool]) -> Channel:
        idx = self._table[tuple(trips)]
        return "primary" if idx == 0 else idx - 1


BOUNDARIES = ("ml_only", "with_prepost", "monitor_inside")


def _decision(decision, monitors: int, alternatives: int) -> DecisionTable:
    if decision is None:
        return DecisionTable.any_trip(monitors, alternatives)
    if isinstance(decision, DecisionTable):
        if decision.monitors != monitors or decision.alternatives > alternatives:
            raise IncompleteDecisionTable("decision table does not match the monitor/alternative count")
        return decision
    return DecisionTable(decision, monitors, alternatives)


def make_rta(
    complex: Component,
    monitors: Sequence[MonitorSpec],
    alternatives: Sequence[Component],
    decision=None,
    boundary: str = "ml_only",
    input_assurance: Optional[Component] = None,
    latency: int = 1,
    hold_down: Optional[int] = None,
    source: Optional[Source] = None,
) -> PatternInstance:
    """Runtime-assurance wrapper: assured monitors, switch and alternatives.

    Monitors read the trusted input (after ``input_assurance`` when given),
    except with ``boundary="monitor_inside"`` where they sit inside the
    complex-function boundary and read its pre-processed input.
    """
    if not monitors:
        raise PatternError("RTA needs at least one monitor")
    if not alternatives:
        raise PatternError("RTA needs at least one alternative function")
    if boundary not in BOUNDARIES:
        raise PatternError(f"unknown RTA boundary {boundary!r}")
    table = _decision(decision, len(monitors), len(alternatives))

    src = _source(source)
    cx = _with_role(complex, Role.COMPLEX)
    comps: list[Component] = [src]
    edges: list[Edge] = []
    trusted = f"{src.id}.x"
    options: dict[str, Any] = {"boundary": boundary, "latency": latency, "hold_down": hold_down}
    inside = [cx.id]
    if input_assurance is not None:
        ia = _with_role(input_assurance, Role.PREPROCESS)
        comps.append(ia)
        edges.append(edge(f"{src.id}.x", f"{ia.id}.{ia.inputs[0]}"))
        trusted = f"{ia.id}.{ia.outputs[0]}"
        options["input_assurance"] = ia.id

    complex_in = f"{src.id}.x"
    complex_out = f"{cx.id}.y"
    if boundary in ("with_prepost", "monitor_inside"):
        pre = PassThrough(id="preprocess", role=Role.PREPROCESS)
        post = PassThrough(id="postprocess", role=Role.POSTPROCESS)
        comps += [pre, cx, post]
        edges += [
            edge(f"{src.id}.x", "preprocess.x"),
            edge("preprocess.y", f"{cx.id}.x"),
            edge(f"{cx.id}.y", "postprocess.x"),
        ]
        complex_in = "preprocess.y"
        complex_out = "postprocess.y"
        inside += ["preprocess", "postprocess"]
    else:
        comps.append(cx)
        edges.append(edge(f"{src.id}.x", f"{cx.id}.x"))

    monitor_view = complex_in if boundary == "monitor_inside" else trusted
    mids = []
    for k, spec in enumerate(monitors):
        mid = f"monitor{k}"
        comps.append(monitor_component(mid, spec))
        edges += _monitor_edges(mid, spec, monitor_view, complex_out)
        edges.append(edge(f"{mid}.trip", f"switch.v{k}"))
        mids.append(mid)
    if boundary == "monitor_inside":
        inside += mids

    sw = Switch(
        id="switch", channels=len(alternatives) + 1, verdicts=len(monitors),
        decide=table, latency=latency, hold_down=hold_down,
    )
    edges.append(edge(complex_out, "switch.ch0"))
    for k, alt in enumerate(alternatives):
        a = _with_role(alt, Role.ALTERNATIVE)
        comps.append(a)
        edges += [edge(trusted, f"{a.id}.x"), edge(f"{a.id}.y", f"switch.ch{k + 1}")]
    comps.append(sw)
    options["inside_boundary"] = inside
    options["monitor_modes"] = [m.mode.value for m in monitors]
    return _instance(PatternKind.RTA, comps, edges, ("switch", "y"), options,
                     active=("switch", "active"), source_id=src.id, decision=table)


def make_rta_ensemble(
    models: Sequence[Component],
    per_model_monitors: Optional[Sequence[Optional[MonitorSpec]]],
    combiner: str,
    alternatives: Sequence[Component],
    decision=None,
    spread_threshold: float = 0.0,
    stamp_tolerance: int = 0,
    latency: int = 1,
    hold_down: Optional[int] = None,
    source: Optional[Source] = None,
) -> PatternInstance:
    """RTA around an ensemble of simpler models.

    The decision table sees one verdict per per-model monitor (in model
    order, skipping ``None`` entries) followed by the consistency verdict.
    """
    if len(models) < 2:
        raise PatternError("ensemble needs at least two models")
    if combiner not in ("mean", "median", "vote"):
        raise PatternError(f"unknown combiner {combiner!r}")
    if not alternatives:
        raise PatternError("RTA needs at least one alternative function")
    per_model = list(per_model_monitors or [None] * len(models))
    if len(per_model) != len(models):
        raise PatternError("one monitor slot per model required")
    n_verdicts = sum(m is not None for m in per_model) + 1
    table = _decision(decision, n_verdicts, len(alternatives))

    src = _source(source)
    comb = Voter(id="combiner", arity=len(models), method=combiner)
    cons = ConsistencyCheck(id="consistency", arity=len(models), threshold=spread_threshold,
                            stamp_tolerance=stamp_tolerance)
    comps: list[Component] = [src]
    edges: list[Edge] = []
    v = 0
    for k, model in enumerate(models):
        m = _with_role(model, Role.COMPLEX)
        comps.append(m)
        edges += [
            edge(f"{src.id}.x", f"{m.id}.x"),
            edge(f"{m.id}.y", f"combiner.r{k}"),
            edge(f"{m.id}.y", f"consistency.m{k}"),
        ]
        spec = per_model[k]
        if spec is not None:
            mid = f"monitor_{m.id}"
            comps.append(monitor_component(mid, spec))
            edges += _monitor_edges(mid, spec, f"{src.id}.x", f"{m.id}.y")
            edges.append(edge(f"{mid}.trip", f"switch.v{v}"))
            v += 1
    edges.append(edge("consistency.trip", f"switch.v{v}"))
    comps += [comb, cons]
    sw = Switch(id="switch", channels=len(alternatives) + 1, verdicts=n_verdicts,
                decide=table, latency=latency, hold_down=hold_down)
    edges.append(edge("combiner.y", "switch.ch0"))
    for k, alt in enumerate(alternatives):
        a = _with_role(alt, Role.ALTERNATIVE)
        comps.append(a)
        edges += [edge(f"{src.id}.x", f"{a.id}.x"), edge(f"{a.id}.y", f"switch.ch{k + 1}")]
    comps.append(sw)
    options = {
        "boundary": "ml_only", "ensemble": True, "combiner": combiner,
        "spread_threshold": spread_threshold, "latency": latency, "hold_down": hold_down,
        "inside_boundary": [m.id for m in models] + ["combiner"],
    }
    return _instance(PatternKind.RTA, comps, edges, ("switch", "y"), options,
                     active=("switch", "active"), source_id=src.id, decision=table)


# -- value overriding -------------------------------------------------------


def _quantile(samples: Sequence[float], q: float) -> float:
    import numpy as np

    return float(np.quantile(np.asarray(samples, dtype=float), q))


def make_value_override(
    source_fn: Component,
    mode: str = "point",
    threshold: float = 0.0,
    worst_case: Union[float, Callable[[Any], Any], None] = None,
    adaptive: Optional[Sequence[tuple[str, float]]] = None,
    distribution: Optional[Sequence[float]] = None,
    quantile: float = 0.05,
    direction: str = "lower",
    source: Optional[Source] = None,
    risk: Optional[Source] = None,
) -> PatternInstance:
    """Override estimates whose uncertainty exceeds the (possibly
    risk-dependent) threshold with a safe value.

    ``point`` mode substitutes ``worst_case``; ``distribution`` mode
    substitutes the configured quantile of the reference distribution
    (``1 - quantile`` when the safe direction is ``upper``). ``adaptive``
    lists ``(risk label, threshold)`` from lowest to highest risk.
    """
    if threshold < 0:
        raise PatternError("threshold must be >= 0")
    if direction not in ("lower", "upper"):
        raise PatternError(f"unknown override direction {direction!r}")
    if mode == "point":
        if worst_case is None:
            raise PatternError("point mode needs a worst-case provider")
        replacement = worst_case if callable(worst_case) else (lambda _v, w=worst_case: w)
        safe_value = None if callable(worst_case) else worst_case
    elif mode == "distribution":
        if not distribution:
            raise PatternError("distribution mode needs a reference distribution")
        q = quantile if direction == "lower" else 1.0 - quantile
        safe_value = _quantile(distribution, q)
        replacement = lambda _v, w=safe_value: w  # noqa: E731
    else:
        raise PatternError(f"unknown value-override mode {mode!r}")
    levels = None
    if adaptive:
        levels = tuple((str(label), float(thr)) for label, thr in adaptive)
        thresholds = [thr for _, thr in levels]
        if any(b > a for a, b in zip(thresholds, thresholds[1:])):
            raise PatternError("adaptive thresholds must not increase with risk")
        if any(t < 0 for t in thresholds):
            raise PatternError("adaptive thresholds must be >= 0")
        if risk is None:
            risk = Source(id="risk")

    src = _source(source)
    est = _with_role(source_fn, Role.COMPLEX)
    ov = ValueOverride(id="override", threshold=threshold, replacement=replacement, adaptive=levels)
    comps: list[Component] = [src, est]
    edges = [
        edge(f"{src.id}.x", f"{est.id}.x"),
        edge(f"{est.id}.y", "override.y"),
        edge(f"{est.id}.u", "override.u"),
    ]
    if levels:
        comps.append(_with_role(risk, Role.SOURCE))
        edges.append(edge(f"{risk.id}.{risk.outputs[0]}", "override.risk"))
    comps.append(ov)
    options = {
        "mode": mode, "threshold": threshold, "adaptive": [list(l) for l in levels] if levels else None,
        "direction": direction, "safe_value": safe_value,
    }
    return _instance(PatternKind.VALUE_OVERRIDE, comps, edges, ("override", "y"), options, source_id=src.id)


# -- function modification -------------------------------------------------


def make_function_modification(
    detector: Component, training_iou: float, source: Optional[Source] = None
) -> PatternInstance:
    if not 0.0 < training_iou <= 1.0:
        raise InvalidIoUBound(f"training IoU must lie in (0, 1], got {training_iou}")
    src = _source(source)
    det = _with_role(detector, Role.COMPLEX)
    post = SafetyPostprocess(id="safety_postprocess", training_iou=training_iou)
    edges = [edge(f"{src.id}.x", f"{det.id}.x"), edge(f"{det.id}.y", "safety_postprocess.y")]
    return _instance(
        PatternKind.FUNCTION_MODIFICATION, [src, det, post], edges, ("safety_postprocess", "y"),
        {"training_iou": training_iou}, source_id=src.id,
    )


# -- input partitioning and selection ---------------------------------------


def declared_space(selector: MonitorSpec) -> tuple[OddRegion, ...]:
    if selector.mode is MonitorMode.INPUT_RANGE:
        return (OddRegion(selector.ranges, "space"),)
    if selector.mode is MonitorMode.ODD_CONFORMANCE:
        return tuple(selector.regions)
    raise IncompatibleMonitorMode("selector must declare the input space (input_range or odd_conformance)")


def check_partitions(partitions: Sequence[Sequence[OddRegion]], space: Sequence[OddRegion]) -> None:
    """Exact disjointness/coverage check on the elementary cells induced by
    all region boundaries. Shared boundaries are not overlaps."""
    dims = space[0].dim
    cuts = []
    for d in range(dims):
        pts = {b for regions in list(partitions) + [space] for r in regions for b in r.bounds[d]}
        cuts.append(sorted(pts))
    mids = [[(a + b) / 2 for a, b in zip(c, c[1:])] for c in cuts]
    for center in itertools.product(*mids):
        owners = [k for k, regions in enumerate(partitions) if any(r.contains(center) for r in regions)]
        if len(owners) > 1:
            raise PartitionOverlap(f"channels {owners} overlap around {center}")
        if not owners and any(r.contains(center) for r in space):
            raise PartitionGap(f"no channel owns inputs around {center}")


def make_input_partitioning(
    channels: Sequence[tuple[Component, Sequence[OddRegion]]],
    selector: MonitorSpec,
    source: Optional[Source] = None,
) -> PatternInstance:
    """Demultiplex inputs to the channel owning their partition and
    multiplex the owner's output back out.

    The selector declares the input space; inputs it rejects produce no
    output. Partitions must tile that space.
    """
    if len(channels) < 2:
        raise PatternError("input partitioning needs at least two channels")
    space = declared_space(selector)
    partitions = tuple(tuple(regions) for _, regions in channels)
    check_partitions(partitions, space)
    src = _source(source)
    demux = Demux(id="demux", partitions=partitions, admission=selector)
    mux = Mux(id="mux", channels=len(channels))
    comps: list[Component] = [src, demux]
    edges = [edge(f"{src.id}.x", "demux.x"), edge("demux.route", "mux.route")]
    for k, (comp, _) in enumerate(channels):
        role = comp.role if comp.role in (Role.COMPLEX, Role.BACKUP, Role.ALTERNATIVE) else Role.ALTERNATIVE
        c = _with_role(comp, role)
        comps.append(c)
        edges += [edge(f"demux.x{k}", f"{c.id}.x"), edge(f"{c.id}.y", f"mux.c{k}")]
    comps.append(mux)
    options = {"channels": [c.id for c, _ in channels], "space": [list(r.bounds) for r in space]}
    return _instance(PatternKind.INPUT_PARTITIONING, comps, edges, ("mux", "y"), options, source_id=src.id)


# -- triple modular redundancy ---------------------------------------------


def make_tmr(replicas: Sequence[Component], voter: str = "majority_exact", source: Optional[Source] = None) -> PatternInstance:
    if len(replicas) != 3:
        raise PatternError(f"TMR needs exactly 3 replicas, got {len(replicas)}")
    if voter not in ("majority_exact", "median"):
        raise PatternError(f"unknown TMR voter {voter!r}")
    src = _source(source)
    vote = Voter(id="voter", arity=3, method=voter)
    comps: list[Component] = [src]
    edges = []
    for k, rep in enumerate(replicas):
        r = _with_role(rep, Role.COMPLEX) if rep.role is Role.SOURCE else rep
        comps.append(r)
        edges += [edge(f"{src.id}.x", f"{r.id}.x"), edge(f"{r.id}.y", f"voter.r{k}")]
    comps.append(vote)
    return _instance(PatternKind.TMR, comps, edges, ("voter", "y"), {"voter": voter}, source_id=src.id)
