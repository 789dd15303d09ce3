"""Fault injection at port boundaries using the SHARD guidewords.

A :class:`FaultSpec` corrupts what a producing port delivers, after the
component has produced it and before any consumer reads it. Several faults on
one port compose in declaration order.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Any, Mapping, Optional, Sequence

from .core import Port, Signal, Topology, TopologyError, derive_seed


class Guideword(str, Enum):
    OMISSION = "omission"
    COMMISSION = "commission"
    EARLY = "early"
    LATE = "late"
    VALUE = "value"


class FaultSpecError(ValueError):
    pass


@dataclass(frozen=True)
class Schedule:
    """Exactly one of ``ticks``, ``interval`` (inclusive) or ``probability``."""

    ticks: Optional[frozenset[int]] = None
    interval: Optional[tuple[int, int]] = None
    probability: Optional[float] = None

    def __post_init__(self):
        given = [x is not None for x in (self.ticks, self.interval, self.probability)]
        if sum(given) != 1:
            raise FaultSpecError("schedule needs exactly one of ticks, interval, probability")
        if self.probability is not None and not 0.0 <= self.probability <= 1.0:
            raise FaultSpecError(f"probability {self.probability} outside [0, 1]")
        if self.interval is not None and self.interval[0] > self.interval[1]:
            raise FaultSpecError(f"empty interval {self.interval}")

    @classmethod
    def at(cls, *ticks: int) -> "Schedule":
        return cls(ticks=frozenset(ticks))

    @classmethod
    def between(cls, start: int, stop: int) -> "Schedule":
        return cls(interval=(start, stop))

    @classmethod
    def bernoulli(cls, p: float) -> "Schedule":
        return cls(probability=p)


@dataclass(frozen=True)
class FaultSpec:
    guideword: Guideword
    target: Port
    schedule: Schedule
    delay: int = 1
    value: Any = None
    offset: Any = None

    def __post_init__(self):
        object.__setattr__(self, "guideword", Guideword(self.guideword))
        if self.guideword in (Guideword.EARLY, Guideword.LATE) and self.delay < 1:
            raise FaultSpecError(f"{self.guideword.value} fault needs delay >= 1")
        if self.guideword is Guideword.COMMISSION and self.value is None:
            raise FaultSpecError("commission fault needs an injected value")
        if self.guideword is Guideword.VALUE and (self.value is None) == (self.offset is None):
            raise FaultSpecError("value fault needs exactly one of value, offset")


def fault_active(spec: FaultSpec, tick: int, rng: random.Random) -> bool:
    sched = spec.schedule
    if sched.ticks is not None:
        return tick in sched.ticks
    if sched.interval is not None:
        return sched.interval[0] <= tick <= sched.interval[1]
    # draw every tick so the stream position never depends on other faults
    return rng.random() < sched.probability


def _offset(value, offset):
    if isinstance(value, tuple):
        if isinstance(offset, (tuple, list)):
            return tuple(v + o for v, o in zip(value, offset))
        return tuple(v + offset for v in value)
    return value + offset


class LateQueue:
    """FIFO buffer behind a ``late`` fault.

    Delayed signals are released at ``produced + delay``; at most one signal
    leaves per tick, so nothing overtakes a delayed signal. An undelivered
    on-time signal is superseded by a newer on-time one, which lets the
    stream catch up once the fault clears.
    """

    def __init__(self):
        self._items: deque = deque()  # [due, signal, delayed]

    def __len__(self):
        return len(self._items)

    def push(self, sig: Optional[Signal], tick: int, delay: Optional[int]) -> Optional[Signal]:
        items = self._items
        if sig is not None:
            if delay is not None:
                items.append([tick + delay, sig, True])
            elif not items:
                return sig
            elif not items[-1][2]:
                items[-1] = [tick, sig, False]
            else:
                items.append([tick, sig, False])
        if items and items[0][0] <= tick:
            return items.popleft()[1]
        return None


def apply_fault(
    spec: FaultSpec,
    produced: Optional[Signal],
    tick: int,
    queue: Optional[LateQueue] = None,
) -> Optional[Signal]:
    """Corrupt one delivery; assumes the fault is active at ``tick``.

    ``late`` needs the port's :class:`LateQueue` to hold the signal; without
    one the delayed signal is simply not delivered this tick.
    """
    g = spec.guideword
    if g is Guideword.OMISSION:
        return None
    if g is Guideword.COMMISSION:
        return Signal(spec.value, True, tick, ("commission",))
    if produced is None:
        if g is Guideword.LATE and queue is not None:
            return queue.push(None, tick, None)
        return None
    if g is Guideword.VALUE:
        new = spec.value if spec.value is not None else _offset(produced.value, spec.offset)
        return produced._replace(value=new, tags=produced.tags + ("value",))
    if g is Guideword.EARLY:
        return produced._replace(stamp=produced.stamp + spec.delay, tags=produced.tags + ("early",))
    if g is Guideword.LATE:
        q = queue if queue is not None else LateQueue()
        return q.push(produced._replace(tags=produced.tags + ("late",)), tick, spec.delay)
    raise FaultSpecError(f"unsupported guideword {g}")


class PortInjector:
    """All faults bound to one port, with their random streams and buffers."""

    def __init__(self, specs: Sequence[FaultSpec], rngs: Sequence[random.Random]):
        self.specs = tuple(specs)
        self.rngs = tuple(rngs)
        self.queues = tuple(LateQueue() if s.guideword is Guideword.LATE else None for s in self.specs)

    def inject(self, sig: Optional[Signal], tick: int) -> Optional[Signal]:
        for spec, rng, queue in zip(self.specs, self.rngs, self.queues):
            active = fault_active(spec, tick, rng)
            if queue is not None:
                if active:
                    sig = apply_fault(spec, sig, tick, queue)
                elif sig is not None or len(queue):
                    sig = queue.push(sig, tick, None)
            elif active:
                sig = apply_fault(spec, sig, tick)
        return sig


def bind_faults(topology: Topology, specs: Sequence[FaultSpec], seed: int) -> dict[Port, PortInjector]:
    """Validate targets and group faults per port. Each fault gets its own stream."""
    grouped: dict[Port, list[tuple[FaultSpec, random.Random]]] = {}
    for index, spec in enumerate(specs):
        if not topology.has_port(spec.target):
            raise TopologyError(f"fault target {spec.target[0]}.{spec.target[1]} is not an output port")
        rng = random.Random(derive_seed(seed, "fault", index))
        grouped.setdefault(tuple(spec.target), []).append((spec, rng))
    return {
        port: PortInjector([s for s, _ in items], [r for _, r in items])
        for port, items in grouped.items()
    }


def fault_from_dict(data: Mapping[str, Any]) -> FaultSpec:
    """Parse the scenario-file fault schema."""
    sched = data["schedule"]
    if "ticks" in sched:
        schedule = Schedule(ticks=frozenset(int(t) for t in sched["ticks"]))
    elif "interval" in sched:
        lo, hi = sched["interval"]
        schedule = Schedule(interval=(int(lo), int(hi)))
    else:
        schedule = Schedule(probability=float(sched["probability"]))
    params = data.get("params", {})
    value = params.get("value")
    offset = params.get("offset")
    return FaultSpec(
        guideword=Guideword(data["guideword"]),
        target=tuple(data["target"]),
        schedule=schedule,
        delay=int(params.get("delay", 1)),
        value=tuple(value) if isinstance(value, list) else value,
        offset=tuple(offset) if isinstance(offset, list) else offset,
    )
