"""Stand-ins for an ML-based complex function, a conventional backup, and the
operating domain they are judged against.

Reference functions are analytic, so the safety envelope around them has an
exact oracle.
"""

from __future__ import annotations

import bisect
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping, Optional, Sequence

from .core import Component, Role, Signal

Vector = tuple[float, ...]


class DimensionMismatch(ValueError):
    pass


def _vec(x) -> Vector:
    if isinstance(x, (int, float)):
        return (float(x),)
    return tuple(float(v) for v in x)


def _check_dim(x: Vector, dim: int) -> None:
    if len(x) != dim:
        raise DimensionMismatch(f"expected {dim}-dimensional input, got {len(x)}")


# -- reference functions ----------------------------------------------------


@dataclass(frozen=True)
class LinearMap:
    """``y = W x + b``; a single output row yields a scalar."""

    weights: tuple[Vector, ...]
    bias: Vector

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(_vec(r) for r in self.weights))
        object.__setattr__(self, "bias", _vec(self.bias))
        if len(self.weights) != len(self.bias) or len({len(r) for r in self.weights}) != 1:
            raise DimensionMismatch("weights and bias shapes disagree")

    @property
    def input_dim(self) -> int:
        return len(self.weights[0])

    def __call__(self, x: Vector):
        if len(self.weights) == 1:
            return sum(w * v for w, v in zip(self.weights[0], x)) + self.bias[0]
        out = tuple(sum(w * v for w, v in zip(row, x)) + b for row, b in zip(self.weights, self.bias))
        return out[0] if len(out) == 1 else out


@dataclass(frozen=True)
class PiecewisePolynomial:
    """Polynomial pieces in one input coordinate.

    ``coefficients[i]`` (ascending powers) applies on
    ``[breakpoints[i-1], breakpoints[i])``; the end pieces extend to infinity.
    """

    breakpoints: Vector
    coefficients: tuple[Vector, ...]
    dim: int = 0
    input_dim: int = 1

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", _vec(self.breakpoints))
        object.__setattr__(self, "coefficients", tuple(_vec(c) for c in self.coefficients))
        if len(self.coefficients) != len(self.breakpoints) + 1:
            raise ValueError("need one more polynomial piece than breakpoints")
        if list(self.breakpoints) != sorted(self.breakpoints):
            raise ValueError("breakpoints must be sorted")

    def __call__(self, x: Vector) -> float:
        u = x[self.dim]
        coeffs = self.coefficients[bisect.bisect_right(self.breakpoints, u)]
        acc = 0.0
        for c in reversed(coeffs):
            acc = acc * u + c
        return acc


@dataclass(frozen=True)
class LookupGrid:
    """Multilinear interpolation over a rectilinear grid, clamped at the edges."""

    axes: tuple[Vector, ...]
    table: Any  # nested lists, one nesting level per axis

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(_vec(a) for a in self.axes))
        for a in self.axes:
            if len(a) < 2 or list(a) != sorted(a):
                raise ValueError("grid axes need >= 2 sorted points")

    @property
    def input_dim(self) -> int:
        return len(self.axes)

    def __call__(self, x: Vector) -> float:
        return self._interp(self.table, x, 0)

    def _interp(self, table, x, axis):
        if axis == len(self.axes):
            return float(table)
        pts = self.axes[axis]
        u = min(max(x[axis], pts[0]), pts[-1])
        i = min(bisect.bisect_right(pts, u) - 1, len(pts) - 2)
        w = (u - pts[i]) / (pts[i + 1] - pts[i])
        lo = self._interp(table[i], x, axis + 1)
        hi = self._interp(table[i + 1], x, axis + 1)
        return lo + w * (hi - lo)


@dataclass(frozen=True)
class Identity:
    input_dim: int = 1

    def __call__(self, x: Vector):
        return x[0] if len(x) == 1 else tuple(x)


def reference_from_dict(data: Mapping[str, Any], input_dim: int):
    kind = data["kind"]
    if kind == "linear":
        ref = LinearMap(tuple(map(tuple, data["weights"])), tuple(data["bias"]))
    elif kind == "piecewise_polynomial":
        ref = PiecewisePolynomial(
            tuple(data["breakpoints"]), tuple(map(tuple, data["coefficients"])),
            dim=data.get("dim", 0), input_dim=input_dim,
        )
    elif kind == "lookup_grid":
        ref = LookupGrid(tuple(map(tuple, data["axes"])), data["table"])
    elif kind == "identity":
        ref = Identity(input_dim)
    else:
        raise ValueError(f"unknown reference kind {kind!r}")
    if ref.input_dim != input_dim:
        raise DimensionMismatch(f"reference expects {ref.input_dim} inputs, profile declares {input_dim}")
    return ref


# -- operating domain -------------------------------------------------------


@dataclass(frozen=True)
class OddRegion:
    bounds: tuple[tuple[float, float], ...]
    label: str = ""

    def __post_init__(self):
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        for lo, hi in bounds:
            if lo > hi:
                raise ValueError(f"region {self.label!r}: lower bound {lo} above upper {hi}")
        object.__setattr__(self, "bounds", bounds)

    @property
    def dim(self) -> int:
        return len(self.bounds)

    def contains(self, x: Vector) -> bool:
        for (lo, hi), v in zip(self.bounds, x):
            if v < lo or v > hi:
                return False
        return True

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "OddRegion":
        return cls(tuple(tuple(b) for b in data["bounds"]), data.get("label", ""))


def in_odd(regions: Sequence[OddRegion], x) -> bool:
    x = _vec(x)
    for region in regions:
        _check_dim(x, region.dim)
    return any(region.contains(x) for region in regions)


# -- complex function -------------------------------------------------------


@dataclass(frozen=True)
class ErrorModel:
    bias: float = 0.0
    noise_std: float = 0.0
    p_erroneous: float = 0.0
    # distance from reference of an erroneous output
    error_magnitude: float = 10.0
    uncertainty: float = 0.0
    # reported uncertainty on erroneous ticks; None reports ``uncertainty``,
    # i.e. the error goes out with the usual confidence
    uncertainty_when_erroneous: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.p_erroneous <= 1.0:
            raise ValueError(f"p_erroneous {self.p_erroneous} outside [0, 1]")
        if self.noise_std < 0 or self.uncertainty < 0:
            raise ValueError("noise_std and uncertainty must be non-negative")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ErrorModel":
        return cls(**data)


@dataclass(frozen=True)
class SurrogateProfile:
    input_dim: int
    reference: Any
    regions: tuple[tuple[OddRegion, ErrorModel], ...] = ()
    ood: ErrorModel = field(default_factory=ErrorModel)

    def __post_init__(self):
        for region, _ in self.regions:
            if region.dim != self.input_dim:
                raise DimensionMismatch(f"region {region.label!r} has {region.dim} dims, profile {self.input_dim}")

    @property
    def odd(self) -> tuple[OddRegion, ...]:
        return tuple(r for r, _ in self.regions)

    def error_model(self, x: Vector) -> ErrorModel:
        for region, model in self.regions:
            if region.contains(x):
                return model
        return self.ood

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SurrogateProfile":
        dim = int(data["input_dim"])
        regions = tuple(
            (OddRegion.from_dict(r), ErrorModel.from_dict(r.get("error", {})))
            for r in data.get("regions", [])
        )
        return cls(
            input_dim=dim,
            reference=reference_from_dict(data["reference"], dim),
            regions=regions,
            ood=ErrorModel.from_dict(data.get("ood", {})),
        )


def _shift(value, delta: float):
    if isinstance(value, tuple):
        return tuple(v + delta for v in value)
    return value + delta


def eval_complex(
    profile: SurrogateProfile,
    x,
    rng: random.Random,
    p_selftest: float = 0.0,
    tick: int = 0,
) -> tuple[Signal, float]:
    """Perturbed reference output plus the uncertainty it reports.

    An erroneous output lands ``error_magnitude`` away from the reference and
    is still flagged valid unless the self-test catches it.
    """
    x = _vec(x)
    _check_dim(x, profile.input_dim)
    model = profile.error_model(x)
    value = profile.reference(x)
    erroneous = model.p_erroneous > 0.0 and rng.random() < model.p_erroneous
    delta = model.bias
    if model.noise_std > 0.0:
        delta += rng.gauss(0.0, model.noise_std)
    if erroneous:
        delta += model.error_magnitude if rng.random() < 0.5 else -model.error_magnitude
    if delta:
        value = _shift(value, delta)
    valid = True
    uncertainty = model.uncertainty
    if erroneous:
        if model.uncertainty_when_erroneous is not None:
            uncertainty = model.uncertainty_when_erroneous
        if p_selftest > 0.0 and rng.random() < p_selftest:
            valid = False
    tags = ("erroneous",) if erroneous else ()
    return Signal(value, valid, tick, tags), uncertainty


@dataclass(eq=False, kw_only=True)
class ComplexSurrogate(Component):
    """Complex-function component: ``x -> (y, u)`` with ``u`` the uncertainty."""

    role: Role = Role.COMPLEX
    inputs: tuple[str, ...] = ("x",)
    outputs: tuple[str, ...] = ("y", "u")
    profile: SurrogateProfile = None
    p_selftest: float = 0.0

    def step(self, inputs, state, tick, rng):
        x = inputs["x"]
        if x is None:
            return {"y": None, "u": None}, state
        sig, u = eval_complex(self.profile, x.value, rng, self.p_selftest, tick)
        y = Signal(sig.value, sig.valid and x.valid, x.stamp, sig.tags)
        return {"y": y, "u": Signal(u, True, x.stamp)}, state


# -- backup -----------------------------------------------------------------


class BackupMode(str, Enum):
    EQUIVALENT = "equivalent"
    DEGRADED = "degraded"


@dataclass(frozen=True)
class BackupProfile:
    mode: BackupMode = BackupMode.EQUIVALENT
    tolerance: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "mode", BackupMode(self.mode))
        if self.tolerance < 0:
            raise ValueError("degraded tolerance must be >= 0")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "BackupProfile":
        return cls(BackupMode(data.get("mode", "equivalent")), float(data.get("tolerance", 0.0)))


def _quantize(v: float, step: float) -> float:
    return round(v / step) * step


def eval_backup(profile: BackupProfile, reference, x, tick: int = 0) -> Signal:
    """Conventional backup output; degraded mode quantizes to a ``2*tolerance`` step."""
    x = _vec(x)
    dim = getattr(reference, "input_dim", len(x))
    _check_dim(x, dim)
    value = reference(x)
    if profile.mode is BackupMode.DEGRADED and profile.tolerance > 0:
        step = 2.0 * profile.tolerance
        value = tuple(_quantize(v, step) for v in value) if isinstance(value, tuple) else _quantize(value, step)
    return Signal(value, True, tick)


@dataclass(eq=False, kw_only=True)
class BackupSurrogate(Component):
    role: Role = Role.BACKUP
    inputs: tuple[str, ...] = ("x",)
    profile: BackupProfile = field(default_factory=BackupProfile)
    reference: Any = None

    def step(self, inputs, state, tick, rng):
        x = inputs["x"]
        if x is None:
            return {"y": None}, state
        return {"y": eval_backup(self.profile, self.reference, x.value, x.stamp)}, state


# -- object detector --------------------------------------------------------


@dataclass(eq=False, kw_only=True)
class DetectorSurrogate(Component):
    """Detector fed the ground-truth box ``(x1, y1, x2, y2)``.

    Emits one flattened detection ``(x1, y1, x2, y2, positive, score)`` whose
    box keeps IoU >= ``iou_floor`` with the ground truth.
    """

    role: Role = Role.COMPLEX
    inputs: tuple[str, ...] = ("x",)
    iou_floor: float = 0.5
    jitter: float = 0.5
    p_negative: float = 0.0

    def step(self, inputs, state, tick, rng):
        from .geometry import Box2D, iou

        x = inputs["x"]
        if x is None:
            return {"y": None}, state
        truth = Box2D(*x.value)
        w, h = truth.width, truth.height
        box = truth
        for _ in range(64):
            cand = (
                truth.x_min + rng.uniform(-self.jitter, self.jitter) * w,
                truth.y_min + rng.uniform(-self.jitter, self.jitter) * h,
                truth.x_max + rng.uniform(-self.jitter, self.jitter) * w,
                truth.y_max + rng.uniform(-self.jitter, self.jitter) * h,
            )
            if cand[0] < cand[2] and cand[1] < cand[3] and iou(Box2D(*cand), truth) >= self.iou_floor:
                box = Box2D(*cand)
                break
        positive = 0.0 if self.p_negative > 0 and rng.random() < self.p_negative else 1.0
        score = round(rng.uniform(0.5, 1.0), 6)
        return {"y": Signal(box.as_tuple() + (positive, score), x.valid, x.stamp)}, state


def reference_value_distance(a, b) -> float:
    """Max-norm distance between scalar or vector values."""
    if isinstance(a, tuple):
        return max(abs(u - v) for u, v in zip(a, b))
    return abs(a - b)

