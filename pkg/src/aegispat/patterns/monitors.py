"""Monitor predicates and the component that evaluates them each tick."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, NamedTuple, Optional, Sequence

import numpy as np

from ..core import Component, Role, Signal
from ..surrogate import OddRegion, in_odd, reference_value_distance


class MonitorMode(str, Enum):
    INPUT_RANGE = "input_range"
    OUTPUT_VALIDITY = "output_validity"
    ODD_CONFORMANCE = "odd_conformance"
    OOD_ENVELOPE = "ood_envelope"


INPUT_MODES = frozenset({MonitorMode.INPUT_RANGE, MonitorMode.ODD_CONFORMANCE, MonitorMode.OOD_ENVELOPE})


class MonitorSpecError(ValueError):
    pass


@dataclass(frozen=True)
class MonitorSpec:
    """What a monitor checks.

    ``ranges`` are per-dimension closed intervals (input range, or the valid
    output range for ``output_validity``). ``lower``/``upper`` bound the
    training-distribution envelope. For ``output_validity``, ``reference`` with
    ``tolerance`` checks the output against the known transfer function and
    ``staleness`` bounds ``|tick - stamp|``.
    """

    mode: MonitorMode
    ranges: Optional[tuple[tuple[float, float], ...]] = None
    regions: tuple[OddRegion, ...] = ()
    lower: Optional[tuple[float, ...]] = None
    upper: Optional[tuple[float, ...]] = None
    reference: Optional[Callable] = None
    tolerance: float = 0.0
    staleness: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "mode", MonitorMode(self.mode))
        if self.ranges is not None:
            ranges = tuple((float(lo), float(hi)) for lo, hi in self.ranges)
            if any(lo > hi for lo, hi in ranges):
                raise MonitorSpecError(f"inverted range in {ranges}")
            object.__setattr__(self, "ranges", ranges)
        m = self.mode
        if m is MonitorMode.INPUT_RANGE and not self.ranges:
            raise MonitorSpecError("input_range monitor needs ranges")
        if m is MonitorMode.ODD_CONFORMANCE and not self.regions:
            raise MonitorSpecError("odd_conformance monitor needs regions")
        if m is MonitorMode.OOD_ENVELOPE:
            if self.lower is None or self.upper is None or len(self.lower) != len(self.upper):
                raise MonitorSpecError("ood_envelope monitor needs matching lower/upper bounds")
            if any(lo > hi for lo, hi in zip(self.lower, self.upper)):
                raise MonitorSpecError("ood_envelope lower bound above upper")
        if m is MonitorMode.OUTPUT_VALIDITY:
            if self.ranges is None and self.reference is None and self.staleness is None:
                raise MonitorSpecError("output_validity monitor needs ranges, reference or staleness")
            if self.staleness is not None and self.staleness < 0:
                raise MonitorSpecError("staleness tolerance must be >= 0")
        if self.tolerance < 0:
            raise MonitorSpecError("tolerance must be >= 0")

    @property
    def observes_inputs(self) -> bool:
        return self.mode in INPUT_MODES


def ood_envelope_from_samples(samples, lower_q: float = 0.01, upper_q: float = 0.99) -> MonitorSpec:
    """Per-dimension quantile envelope of training samples (rows are inputs)."""
    arr = np.asarray(samples, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    lo = np.quantile(arr, lower_q, axis=0)
    hi = np.quantile(arr, upper_q, axis=0)
    return MonitorSpec(MonitorMode.OOD_ENVELOPE, lower=tuple(map(float, lo)), upper=tuple(map(float, hi)))


class Verdict(NamedTuple):
    trip: bool
    reasons: tuple[str, ...] = ()


PASS = Verdict(False)


def _as_vec(value) -> tuple:
    if isinstance(value, (tuple, list)):
        return tuple(value)
    return (value,)


def _outside(values, ranges) -> bool:
    return any(not (lo <= v <= hi) or math.isnan(v) for v, (lo, hi) in zip(values, ranges))


def eval_monitor(
    spec: MonitorSpec,
    observed: Optional[Signal],
    tick: Optional[int] = None,
    context: Optional[Signal] = None,
) -> Verdict:
    """Pure monitor predicate.

    ``context`` is the input the monitored output was computed from; only a
    reference check uses it. ``tick`` is needed for staleness checks.
    """
    if observed is None:
        return Verdict(True, ("absence",))
    reasons = []
    if not observed.valid:
        reasons.append("validity")
    values = _as_vec(observed.value)
    mode = spec.mode
    if mode is MonitorMode.INPUT_RANGE:
        if _outside(values, spec.ranges):
            reasons.append("range")
    elif mode is MonitorMode.ODD_CONFORMANCE:
        if not in_odd(spec.regions, values):
            reasons.append("odd")
    elif mode is MonitorMode.OOD_ENVELOPE:
        if _outside(values, tuple(zip(spec.lower, spec.upper))):
            reasons.append("ood")
    else:
        if spec.ranges is not None and _outside(values, spec.ranges):
            reasons.append("range")
        if spec.staleness is not None and tick is not None and abs(tick - observed.stamp) > spec.staleness:
            reasons.append("staleness")
        if spec.reference is not None:
            if context is None:
                reasons.append("reference")
            else:
                expected = spec.reference(_as_vec(context.value))
                if reference_value_distance(observed.value, expected) > spec.tolerance:
                    reasons.append("reference")
    return Verdict(bool(reasons), tuple(reasons))


def verdict_signal(verdict: Verdict, tick: int) -> Signal:
    return Signal(1.0 if verdict.trip else 0.0, True, tick, verdict.reasons)


def tripped(sig: Optional[Signal]) -> bool:
    """Read a verdict port; a missing verdict counts as a trip."""
    return sig is None or not sig.valid or sig.value != 0.0


@dataclass(eq=False, kw_only=True)
class MonitorComponent(Component):
    """Evaluates ``spec`` on port ``obs`` (and ``ctx`` for reference checks)."""

    role: Role = Role.MONITOR
    inputs: tuple[str, ...] = ("obs",)
    outputs: tuple[str, ...] = ("trip",)
    spec: MonitorSpec = None

    def step(self, inputs, state, tick, rng):
        verdict = eval_monitor(self.spec, inputs["obs"], tick, inputs.get("ctx"))
        return {"trip": verdict_signal(verdict, tick)}, state


def monitor_component(cid: str, spec: MonitorSpec) -> MonitorComponent:
    needs_ctx = spec.mode is MonitorMode.OUTPUT_VALIDITY and spec.reference is not None
    return MonitorComponent(id=cid, spec=spec, inputs=("obs", "ctx") if needs_ctx else ("obs",))


def monitor_from_dict(data: dict, reference: Optional[Callable] = None, odd: Sequence[OddRegion] = ()) -> MonitorSpec:
    """Parse the scenario-file monitor schema.

    ``"regions": "surrogate"`` reuses the surrogate's declared ODD, and
    ``"reference": true`` checks outputs against the surrogate's reference.
    """
    mode = MonitorMode(data["mode"])
    ranges = data.get("ranges")
    regions: Any = data.get("regions", ())
    if regions == "surrogate":
        regions = tuple(odd)
    else:
        regions = tuple(OddRegion.from_dict(r) for r in regions)
    kwargs: dict[str, Any] = dict(
        mode=mode,
        ranges=tuple(map(tuple, ranges)) if ranges is not None else None,
        regions=regions,
        tolerance=float(data.get("tolerance", 0.0)),
        staleness=data.get("staleness"),
    )
    if mode is MonitorMode.OOD_ENVELOPE:
        if "samples" in data:
            q = data.get("quantiles", [0.01, 0.99])
            return ood_envelope_from_samples(data["samples"], q[0], q[1])
        kwargs["lower"] = tuple(data["lower"])
        kwargs["upper"] = tuple(data["upper"])
    if data.get("reference"):
        kwargs["reference"] = reference
    return MonitorSpec(**kwargs)
