"""Deterministic discrete-time dataflow engine.

Components exchange :class:`Signal` values over edges between named ports.
Every tick, each component runs exactly once, in the topological order of the
zero-delay subgraph. Edges with ``delay >= 1`` carry values across ticks and
are the only way to close a feedback loop.

An *absence* (no delivery on a port) is represented by ``None`` and is
distinct from a delivered signal with ``valid=False``.
"""

from __future__ import annotations

import hashlib
import json
import random
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Iterable, Mapping, NamedTuple, Optional, Sequence

Port = tuple[str, str]


class Signal(NamedTuple):
    """A timestamped, validity-flagged value delivered on a port."""

    value: Any
    valid: bool = True
    stamp: int = 0
    tags: tuple[str, ...] = ()


class Role(str, Enum):
    SOURCE = "source"
    COMPLEX = "complex"
    MONITOR = "monitor"
    SWITCH = "switch"
    BACKUP = "backup"
    ALTERNATIVE = "alternative"
    VOTER = "voter"
    SELECTOR = "selector"
    PREPROCESS = "preprocess"
    POSTPROCESS = "postprocess"
    SINK = "sink"


class TopologyError(ValueError):
    pass


class DuplicateId(TopologyError):
    pass


class DanglingEdge(TopologyError):
    pass


class ZeroDelayCycle(TopologyError):
    pass


class PortConflict(TopologyError):
    """A consumer port has no producer, or more than one."""


class MissingExternalInput(RuntimeError):
    pass


class SimulationError(RuntimeError):
    def __init__(self, tick: int, message: str):
        super().__init__(f"tick {tick}: {message}")
        self.tick = tick


def derive_seed(*parts: object) -> int:
    """Stable 63-bit seed from arbitrary parts (master seed, component id, ...)."""
    digest = hashlib.sha256(":".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


@dataclass(eq=False, kw_only=True)
class Component:
    """A node of the dataflow graph.

    Subclasses override :meth:`step`, a pure function of the inputs at the
    current tick, the component's own state, and its private random stream.
    """

    id: str
    role: Role
    inputs: tuple[str, ...] = ()
    outputs: tuple[str, ...] = ("y",)

    def initial_state(self) -> Any:
        return None

    def step(self, inputs: dict, state: Any, tick: int, rng: random.Random):
        raise NotImplementedError


@dataclass(eq=False, kw_only=True)
class Source(Component):
    """External or generated input.

    With ``generator`` unset, values must arrive through the ``external`` map
    of :func:`step`; a missing key raises :class:`MissingExternalInput`.
    """

    role: Role = Role.SOURCE
    outputs: tuple[str, ...] = ("x",)
    generator: Optional[Callable[[int, random.Random], Any]] = None

    def step(self, inputs, state, tick, rng):
        port = self.outputs[0]
        return {port: Signal(self.generator(tick, rng), True, tick)}, state


@dataclass(eq=False, kw_only=True)
class FunctionComponent(Component):
    """Stateless component wrapping ``fn(inputs, tick) -> outputs``."""

    fn: Callable[[dict, int], dict] = None

    def step(self, inputs, state, tick, rng):
        return self.fn(inputs, tick), state


class Edge(NamedTuple):
    src: str
    src_port: str
    dst: str
    dst_port: str
    delay: int = 0


def edge(producer: str, consumer: str, delay: int = 0) -> Edge:
    """Build an edge from ``"comp.port"`` strings."""
    src, src_port = producer.split(".", 1)
    dst, dst_port = consumer.split(".", 1)
    return Edge(src, src_port, dst, dst_port, delay)


@dataclass(frozen=True, eq=False)
class Topology:
    components: dict[str, Component]
    edges: tuple[Edge, ...]
    order: tuple[str, ...]
    # consumer port -> index of its (unique) producing edge
    feeds: dict[Port, int] = field(repr=False)
    # per component in order: (id, component, external?, ((port, edge index, delayed?, producer port), ...))
    plan: tuple = field(default=(), repr=False)

    def component(self, cid: str) -> Component:
        return self.components[cid]

    def has_port(self, port: Port) -> bool:
        comp = self.components.get(port[0])
        return comp is not None and port[1] in comp.outputs

    def rank(self, cid: str) -> int:
        return self.order.index(cid)


def build_topology(components: Iterable[Component], edges: Iterable[Edge]) -> Topology:
    comps: dict[str, Component] = {}
    for comp in components:
        if comp.id in comps:
            raise DuplicateId(f"duplicate component id {comp.id!r}")
        comps[comp.id] = comp
    edges = tuple(edges)

    feeds: dict[Port, int] = {}
    for i, e in enumerate(edges):
        if e.delay < 0:
            raise TopologyError(f"negative delay on {e}")
        src = comps.get(e.src)
        dst = comps.get(e.dst)
        if src is None or e.src_port not in src.outputs:
            raise DanglingEdge(f"unknown producer port {e.src}.{e.src_port}")
        if dst is None or e.dst_port not in dst.inputs:
            raise DanglingEdge(f"unknown consumer port {e.dst}.{e.dst_port}")
        key = (e.dst, e.dst_port)
        if key in feeds:
            raise PortConflict(f"consumer port {e.dst}.{e.dst_port} has more than one producer")
        feeds[key] = i
    for comp in comps.values():
        for port in comp.inputs:
            if (comp.id, port) not in feeds:
                raise PortConflict(f"consumer port {comp.id}.{port} has no producer")

    # Kahn's algorithm over zero-delay edges; ties keep declaration order.
    indegree = {cid: 0 for cid in comps}
    successors: dict[str, list[str]] = {cid: [] for cid in comps}
    for e in edges:
        if e.delay == 0:
            indegree[e.dst] += 1
            successors[e.src].append(e.dst)
    position = {cid: i for i, cid in enumerate(comps)}
    ready = [cid for cid in comps if indegree[cid] == 0]
    order: list[str] = []
    while ready:
        ready.sort(key=position.__getitem__)
        cid = ready.pop(0)
        order.append(cid)
        for nxt in successors[cid]:
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                ready.append(nxt)
    if len(order) != len(comps):
        stuck = sorted(cid for cid, deg in indegree.items() if deg > 0)
        raise ZeroDelayCycle(f"zero-delay cycle through {stuck}")
    plan = tuple(
        (
            cid,
            comps[cid],
            comps[cid].role is Role.SOURCE and getattr(comps[cid], "generator", None) is None,
            tuple(
                (port, feeds[(cid, port)], edges[feeds[(cid, port)]].delay > 0,
                 (edges[feeds[(cid, port)]].src, edges[feeds[(cid, port)]].src_port))
                for port in comps[cid].inputs
            ),
        )
        for cid in order
    )
    return Topology(comps, edges, tuple(order), feeds, plan)


@dataclass
class EngineState:
    next_tick: int
    states: dict[str, Any]
    rngs: dict[str, random.Random]
    lines: dict[int, deque]
    injectors: dict[Port, Any]


def init_state(topology: Topology, seed: int, injectors: Optional[Mapping[Port, Any]] = None) -> EngineState:
    """Fresh engine state; ``injectors`` come from :func:`aegispat.faults.bind_faults`."""
    lines = {
        i: deque([None] * e.delay)
        for i, e in enumerate(topology.edges)
        if e.delay > 0
    }
    return EngineState(
        next_tick=0,
        states={cid: c.initial_state() for cid, c in topology.components.items()},
        rngs={cid: random.Random(derive_seed(seed, cid)) for cid in topology.components},
        lines=lines,
        injectors=dict(injectors or {}),
    )


def step(
    topology: Topology,
    state: EngineState,
    tick: int,
    external: Optional[Mapping[Port, Signal]] = None,
    keep: Optional[set] = None,
):
    """Advance one tick. Returns ``(state, outputs, events)``.

    ``outputs`` maps every output port to what was delivered on it this tick
    (after fault injection); ``events`` lists ``(tick, component, port,
    signal-or-None)`` in topological order, restricted to ``keep`` if given.
    """
    if tick != state.next_tick:
        raise SimulationError(tick, f"expected tick {state.next_tick}")
    lines = state.lines
    injectors = state.injectors
    states = state.states
    rngs = state.rngs
    delayed = {i: line.popleft() for i, line in lines.items()}
    produced: dict[Port, Optional[Signal]] = {}
    events = []

    for cid, comp, is_external, wiring in topology.plan:
        if is_external:
            outs = {}
            for port in comp.outputs:
                if external is None or (cid, port) not in external:
                    raise MissingExternalInput(f"tick {tick}: no value for source port {cid}.{port}")
                outs[port] = external[(cid, port)]
        else:
            inputs = {
                port: delayed[i] if is_delayed else produced[src]
                for port, i, is_delayed, src in wiring
            }
            outs, states[cid] = comp.step(inputs, states[cid], tick, rngs[cid])
        for port in comp.outputs:
            key = (cid, port)
            sig = outs.get(port)
            if injectors:
                inj = injectors.get(key)
                if inj is not None:
                    sig = inj.inject(sig, tick)
            produced[key] = sig
            if keep is None or key in keep:
                events.append((tick, cid, port, sig))

    edges = topology.edges
    for i, line in lines.items():
        e = edges[i]
        line.append(produced[(e.src, e.src_port)])
    state.next_tick = tick + 1
    return state, produced, events


@dataclass
class Trace:
    events: list[tuple[int, str, str, Optional[Signal]]]
    metrics: dict[str, Any] = field(default_factory=dict)

    def port(self, cid: str, port: str) -> list[Optional[Signal]]:
        """Deliveries on one port, indexed by tick."""
        return [sig for _, c, p, sig in self.events if c == cid and p == port]

    def to_json(self) -> str:
        rows = [
            [t, c, p, None if s is None else [_plain(s.value), s.valid, s.stamp, list(s.tags)]]
            for t, c, p, s in self.events
        ]
        return json.dumps({"events": rows, "metrics": self.metrics}, sort_keys=True, separators=(",", ":"))


def _plain(value):
    if isinstance(value, (tuple, list)):
        return [_plain(v) for v in value]
    return value


def run(
    topology: Topology,
    horizon: int,
    seed: int,
    external: Optional[Callable[[int], Mapping[Port, Signal]]] = None,
    injectors: Optional[Mapping[Port, Any]] = None,
    record: Optional[Sequence[Port]] = None,
) -> Trace:
    """Run ticks ``0..horizon-1``.

    ``external`` supplies values for generator-less sources each tick.
    ``record`` restricts the trace to the given ports (all ports when None).
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    state = init_state(topology, seed, injectors)
    keep = None if record is None else set(record)
    events: list = []
    for tick in range(horizon):
        ext = external(tick) if external is not None else None
        try:
            state, _, evs = step(topology, state, tick, ext, keep)
        except (MissingExternalInput, SimulationError):
            raise
        except Exception as exc:  # component failures carry tick context
            raise SimulationError(tick, f"{type(exc).__name__}: {exc}") from exc
        events.extend(evs)
    return Trace(events)
