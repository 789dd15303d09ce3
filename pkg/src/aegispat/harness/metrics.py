"""Safety envelope and per-trial metrics."""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Any, Iterable, Mapping, Optional, Sequence

from ..core import Port, Signal, Trace
from ..geometry import Box2D, DegenerateBox


@dataclass(frozen=True)
class SafetyEnvelope:
    """When is a delivered, valid output safe?

    ``abs_deviation``: within ``epsilon`` of the reference function applied to
    the true input (``side`` restricts the check to over- or under-estimates).
    ``range``: every component within ``[lo, hi]``. ``box_containment``: a
    positive detection whose box covers the true box.
    """

    kind: str
    epsilon: float = 0.0
    side: str = "both"
    lo: float = 0.0
    hi: float = 0.0

    def __post_init__(self):
        if self.kind not in ("abs_deviation", "range", "box_containment"):
            raise ValueError(f"unknown envelope kind {self.kind!r}")
        if self.epsilon < 0:
            raise ValueError("envelope epsilon must be >= 0")
        if self.kind == "range" and not self.lo < self.hi:
            raise ValueError("envelope range needs lo < hi")
        if self.side not in ("both", "upper", "lower"):
            raise ValueError(f"unknown envelope side {self.side!r}")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SafetyEnvelope":
        return cls(
            data["kind"], float(data.get("epsilon", 0.0)), data.get("side", "both"),
            float(data.get("lo", 0.0)), float(data.get("hi", 0.0)),
        )

    def violates(self, value, truth, reference) -> bool:
        if self.kind == "abs_deviation":
            expected = reference(truth)
            got = value if isinstance(value, tuple) else (value,)
            exp = expected if isinstance(expected, tuple) else (expected,)
            diffs = [g - e for g, e in zip(got, exp)]
            if self.side == "upper":
                return max(diffs) > self.epsilon
            if self.side == "lower":
                return max(-d for d in diffs) > self.epsilon
            return max(abs(d) for d in diffs) > self.epsilon
        if self.kind == "range":
            vals = value if isinstance(value, tuple) else (value,)
            return any(not self.lo <= v <= self.hi for v in vals)
        if not value[4]:
            return True  # missed object
        try:
            return not Box2D(*value[:4]).contains(Box2D(*truth[:4]), tol=1e-9)
        except DegenerateBox:
            return True


@dataclass
class Metrics:
    """Additive per-trial counters; ``+`` merges trials in any order."""

    ticks: int = 0
    hazards: int = 0
    loss: int = 0
    backup_ticks: int = 0
    switch_events: int = 0
    overrides: int = 0
    hours: int = 0
    failing_hours: int = 0

    def __add__(self, other: "Metrics") -> "Metrics":
        return Metrics(*(getattr(self, f.name) + getattr(other, f.name) for f in fields(self)))

    @property
    def ok(self) -> int:
        return self.ticks - self.hazards - self.loss

    @property
    def availability(self) -> float:
        return 1.0 - self.loss / self.ticks if self.ticks else 1.0

    @property
    def backup_active(self) -> float:
        return self.backup_ticks / self.ticks if self.ticks else 0.0


def classify(outputs: Sequence[Optional[Signal]], truths: Sequence, envelope: SafetyEnvelope, reference) -> list[str]:
    """Per tick: ``"hazard"``, ``"loss"`` or ``"ok"``."""
    out = []
    for sig, truth in zip(outputs, truths):
        if sig is None or not sig.valid:
            out.append("loss")
        elif envelope.violates(sig.value, truth, reference):
            out.append("hazard")
        else:
            out.append("ok")
    return out


def compute_metrics(
    trace: Trace,
    envelope: SafetyEnvelope,
    output: Port,
    truths: Sequence,
    reference,
    active: Optional[Port] = None,
    ticks_per_hour: int = 3600,
) -> tuple[Metrics, list[int]]:
    """Single pass over the recorded pattern output (and switch state).

    Returns the counters and the ticks at which hazards occurred. Hour
    windows are consecutive blocks of ``ticks_per_hour`` ticks; a partial
    trailing block is not counted.
    """
    outputs = trace.port(*output)
    m = Metrics(ticks=len(outputs))
    hazard_ticks = []
    for t, kind in enumerate(classify(outputs, truths, envelope, reference)):
        if kind == "hazard":
            m.hazards += 1
            hazard_ticks.append(t)
        elif kind == "loss":
            m.loss += 1
        sig = outputs[t]
        if sig is not None and "overridden" in sig.tags:
            m.overrides += 1
    if active is not None:
        for sig in trace.port(*active):
            if sig is None:
                continue
            if sig.value >= 1:
                m.backup_ticks += 1
            if "switch" in sig.tags:
                m.switch_events += 1
    m.hours = m.ticks // ticks_per_hour
    failing = {t // ticks_per_hour for t in hazard_ticks if t < m.hours * ticks_per_hour}
    m.failing_hours = len(failing)
    return m, hazard_ticks


@dataclass(frozen=True)
class RateEstimate:
    rate: float
    lower: float
    upper: float
    failing_hours: int
    hours: int

    def to_dict(self) -> dict:
        return {"rate": self.rate, "lower": self.lower, "upper": self.upper,
                "failing_hours": self.failing_hours, "hours": self.hours}


def wilson_interval(failing: int, hours: int) -> RateEstimate:
    """Failure rate per operational hour with a 95% Wilson score interval."""
    if hours == 0:
        return RateEstimate(0.0, 0.0, 1.0, 0, 0)
    from scipy.stats import binomtest

    ci = binomtest(failing, hours).proportion_ci(confidence_level=0.95, method="wilson")
    return RateEstimate(failing / hours, float(ci.low), float(ci.high), failing, hours)


def merge(parts: Iterable[Metrics]) -> Metrics:
    total = Metrics()
    for part in parts:
        total = total + part
    return total
