"""Runtime building blocks shared by the pattern constructors."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Any, Callable, NamedTuple, Optional, Sequence

from ..core import Component, Role, Signal
from ..geometry import Detection, safety_postprocess
from ..surrogate import OddRegion, reference_value_distance
from .monitors import MonitorSpec, eval_monitor, tripped

PRIMARY = 0
IN_TRANSIT = -1


class SwitchState(NamedTuple):
    """``active`` is 0 for the primary channel, ``k + 1`` for alternative k."""

    active: int = PRIMARY
    target: int = PRIMARY
    ready: int = 0
    clear_ticks: int = 0

    @property
    def switching(self) -> bool:
        return self.active != self.target


@dataclass(eq=False, kw_only=True)
class Switch(Component):
    """Selects one channel per tick.

    ``decide`` maps the tuple of monitor trips to a target channel. With
    ``self_report`` the primary's own absence or invalid flag also demands
    alternative 0. A switch initiated at tick t delivers nothing until
    ``t + latency``. Without ``hold_down`` the switch latches; otherwise it
    returns to the primary once the demand has been clear that many ticks.
    """

    role: Role = Role.SWITCH
    outputs: tuple[str, ...] = ("y", "active")
    channels: int = 2
    verdicts: int = 0
    decide: Callable[[tuple[bool, ...]], int] = None
    self_report: bool = False
    latency: int = 1
    hold_down: Optional[int] = None

    def __post_init__(self):
        if self.latency < 0:
            raise ValueError("switch latency must be >= 0")
        self.inputs = tuple(f"ch{k}" for k in range(self.channels)) + tuple(
            f"v{k}" for k in range(self.verdicts)
        )

    def initial_state(self):
        return SwitchState()

    def _demand(self, inputs) -> int:
        trips = tuple(tripped(inputs[f"v{k}"]) for k in range(self.verdicts))
        target = self.decide(trips) if self.decide is not None else (1 if any(trips) else PRIMARY)
        if target == PRIMARY and self.self_report:
            primary = inputs["ch0"]
            if primary is None or not primary.valid:
                target = 1
        return target

    def step(self, inputs, state: SwitchState, tick, rng):
        demand = self._demand(inputs)
        tags: tuple[str, ...] = ()
        if state.switching and tick >= state.ready:
            state = state._replace(active=state.target)
        if not state.switching:
            if demand != PRIMARY and demand != state.active:
                state = SwitchState(state.active, demand, tick + self.latency, 0)
                tags = ("switch",)
            elif demand == PRIMARY and state.active != PRIMARY and self.hold_down is not None:
                clear = state.clear_ticks + 1
                if clear >= self.hold_down:
                    state = SwitchState(state.active, PRIMARY, tick + self.latency, 0)
                    tags = ("switch", "switch_back")
                else:
                    state = state._replace(clear_ticks=clear)
            elif demand != PRIMARY:
                state = state._replace(clear_ticks=0)
            if state.switching and tick >= state.ready:
                state = state._replace(active=state.target)
        if state.switching:
            return {"y": None, "active": Signal(IN_TRANSIT, True, tick, tags)}, state
        return {"y": inputs[f"ch{state.active}"], "active": Signal(state.active, True, tick, tags)}, state


@dataclass(eq=False, kw_only=True)
class Gate(Component):
    """Active-monitor output stage: disconnect or flag the output on a trip."""

    role: Role = Role.SWITCH
    inputs: tuple[str, ...] = ("y", "trip")
    action: str = "disconnect"

    def __post_init__(self):
        if self.action not in ("disconnect", "flag_invalid"):
            raise ValueError(f"unknown monitor action {self.action!r}")

    def step(self, inputs, state, tick, rng):
        y = inputs["y"]
        if y is None or not tripped(inputs["trip"]):
            return {"y": y}, state
        if self.action == "disconnect":
            return {"y": None}, state
        return {"y": y._replace(valid=False, tags=y.tags + ("flagged",))}, state


def values_agree(a, b, tol: float = 1e-9) -> bool:
    return reference_value_distance(a, b) <= tol


def median_value(values: Sequence[Any]):
    if isinstance(values[0], tuple):
        return tuple(statistics.median(col) for col in zip(*values))
    return statistics.median(values)


def mean_value(values: Sequence[Any]):
    if isinstance(values[0], tuple):
        return tuple(sum(col) / len(col) for col in zip(*values))
    return sum(values) / len(values)


def majority(signals: Sequence[Optional[Signal]], tol: float = 1e-9) -> Optional[Signal]:
    """2-of-N agreement; no majority yields an invalid median."""
    present = [s for s in signals if s is not None]
    if not present:
        return None
    healthy = [s for s in present if s.valid]
    need = len(signals) // 2 + 1
    for a in healthy:
        votes = sum(1 for b in healthy if values_agree(a.value, b.value, tol))
        if votes >= need:
            return Signal(a.value, True, a.stamp, ("voted",))
    pool = healthy or present
    return Signal(median_value([s.value for s in pool]), False, max(s.stamp for s in pool), ("no_majority",))


def _finite(value) -> bool:
    values = value if isinstance(value, tuple) else (value,)
    return all(isinstance(v, (int, float)) and math.isfinite(v) for v in values)


def median_vote(signals: Sequence[Optional[Signal]]) -> Optional[Signal]:
    """Median of the valid, finite values (NaN has no place in an ordering)."""
    present = [s for s in signals if s is not None]
    healthy = [s for s in present if s.valid and _finite(s.value)]
    if not healthy:
        if not present:
            return None
        return Signal(median_value([s.value for s in present]), False, max(s.stamp for s in present))
    return Signal(median_value([s.value for s in healthy]), True, max(s.stamp for s in healthy))


def mean_vote(signals: Sequence[Optional[Signal]]) -> Optional[Signal]:
    healthy = [s for s in signals if s is not None and s.valid and _finite(s.value)]
    if not healthy:
        return None
    return Signal(mean_value([s.value for s in healthy]), True, max(s.stamp for s in healthy))


COMBINERS = {"majority_exact": majority, "vote": majority, "median": median_vote, "mean": mean_vote}


@dataclass(eq=False, kw_only=True)
class Voter(Component):
    role: Role = Role.VOTER
    arity: int = 3
    method: str = "majority_exact"

    def __post_init__(self):
        if self.method not in COMBINERS:
            raise ValueError(f"unknown voter {self.method!r}")
        self.inputs = tuple(f"r{k}" for k in range(self.arity))
        self._combine = COMBINERS[self.method]

    def step(self, inputs, state, tick, rng):
        return {"y": self._combine([inputs[p] for p in self.inputs])}, state


@dataclass(eq=False, kw_only=True)
class ConsistencyCheck(Component):
    """Ensemble cross-check: trips on missing models, misaligned stamps, or
    an output spread (max minus min, per component) above ``threshold``."""

    role: Role = Role.MONITOR
    outputs: tuple[str, ...] = ("trip",)
    arity: int = 2
    threshold: float = 0.0
    stamp_tolerance: int = 0

    def __post_init__(self):
        self.inputs = tuple(f"m{k}" for k in range(self.arity))

    def step(self, inputs, state, tick, rng):
        sigs = [inputs[p] for p in self.inputs]
        reasons = []
        if any(s is None for s in sigs):
            reasons.append("absence")
        else:
            if not all(s.valid for s in sigs):
                reasons.append("validity")
            stamps = [s.stamp for s in sigs]
            if max(stamps) - min(stamps) > self.stamp_tolerance:
                reasons.append("staleness")
            spread = max(reference_value_distance(a.value, b.value) for a in sigs for b in sigs)
            if spread > self.threshold:
                reasons.append("consistency")
        return {"trip": Signal(1.0 if reasons else 0.0, True, tick, tuple(reasons))}, state


def effective_threshold(levels: Sequence[tuple[str, float]], risk) -> float:
    """Threshold for the given risk level; unknown or absent risk gets the
    most conservative (lowest) threshold."""
    if risk is not None:
        if isinstance(risk, str):
            for label, thr in levels:
                if label == risk:
                    return thr
        elif isinstance(risk, (int, float)) and 0 <= int(risk) < len(levels):
            return levels[int(risk)][1]
    return min(thr for _, thr in levels)


@dataclass(eq=False, kw_only=True)
class ValueOverride(Component):
    """Replaces values whose reported uncertainty exceeds the threshold."""

    role: Role = Role.SWITCH
    inputs: tuple[str, ...] = ("y", "u")
    threshold: float = 0.0
    replacement: Callable[[Any], Any] = None
    adaptive: Optional[tuple[tuple[str, float], ...]] = None

    def __post_init__(self):
        if self.adaptive:
            self.inputs = ("y", "u", "risk")

    def threshold_for(self, risk_sig: Optional[Signal]) -> float:
        if not self.adaptive:
            return self.threshold
        return effective_threshold(self.adaptive, None if risk_sig is None else risk_sig.value)

    def step(self, inputs, state, tick, rng):
        y = inputs["y"]
        if y is None:
            return {"y": None}, state
        u = inputs["u"]
        limit = self.threshold_for(inputs.get("risk"))
        if u is not None and u.valid and u.value <= limit:
            return {"y": y}, state
        return {"y": Signal(self.replacement(y.value), True, y.stamp, ("overridden",))}, state


@dataclass(eq=False, kw_only=True)
class SafetyPostprocess(Component):
    """Enlarges positive detections in a flattened ``k x 6`` detection vector."""

    role: Role = Role.POSTPROCESS
    inputs: tuple[str, ...] = ("y",)
    training_iou: float = 1.0

    def step(self, inputs, state, tick, rng):
        y = inputs["y"]
        if y is None:
            return {"y": None}, state
        flat = y.value
        dets = [Detection.from_tuple(flat[i : i + 6]) for i in range(0, len(flat), 6)]
        out = safety_postprocess(dets, self.training_iou)
        return {"y": y._replace(value=tuple(v for d in out for v in d.as_tuple()))}, state


@dataclass(eq=False, kw_only=True)
class Demux(Component):
    """Routes the input to the first channel whose partition contains it."""

    role: Role = Role.SELECTOR
    inputs: tuple[str, ...] = ("x",)
    partitions: tuple[tuple[OddRegion, ...], ...] = ()
    admission: Optional[MonitorSpec] = None

    def __post_init__(self):
        self.outputs = tuple(f"x{k}" for k in range(len(self.partitions))) + ("route",)

    def owner(self, values) -> Optional[int]:
        for k, regions in enumerate(self.partitions):
            if any(r.contains(values) for r in regions):
                return k
        return None

    def step(self, inputs, state, tick, rng):
        x = inputs["x"]
        out = {p: None for p in self.outputs}
        if x is None:
            return out, state
        if self.admission is not None and eval_monitor(self.admission, x, tick).trip:
            return out, state
        vals = x.value if isinstance(x.value, tuple) else (x.value,)
        k = self.owner(vals)
        if k is not None:
            out[f"x{k}"] = x
            out["route"] = Signal(k, True, tick)
        return out, state


@dataclass(eq=False, kw_only=True)
class Mux(Component):
    role: Role = Role.SELECTOR
    channels: int = 2

    def __post_init__(self):
        self.inputs = ("route",) + tuple(f"c{k}" for k in range(self.channels))

    def step(self, inputs, state, tick, rng):
        route = inputs["route"]
        if route is None:
            return {"y": None}, state
        return {"y": inputs[f"c{route.value}"]}, state


@dataclass(eq=False, kw_only=True)
class PassThrough(Component):
    """Identity stage, or ``fn`` applied to the value (validity kept)."""

    inputs: tuple[str, ...] = ("x",)
    outputs: tuple[str, ...] = ("y",)
    fn: Optional[Callable[[Any], Any]] = None

    def step(self, inputs, state, tick, rng):
        x = inputs[self.inputs[0]]
        if x is None or self.fn is None:
            return {self.outputs[0]: x}, state
        return {self.outputs[0]: x._replace(value=self.fn(x.value))}, state


def clamp_fn(ranges: Sequence[tuple[float, float]]) -> Callable[[Any], Any]:
    """Input conditioning that clamps each coordinate into its range."""

    def clamp(value):
        if isinstance(value, tuple):
            return tuple(min(max(v, lo), hi) for v, (lo, hi) in zip(value, ranges))
        lo, hi = ranges[0]
        return min(max(value, lo), hi)

    return clamp
