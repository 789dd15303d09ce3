"""Axis-aligned box arithmetic for safety post-processing of detections.

Enlarging a predicted box ``P`` by a relative per-side factor ``e`` pushes each
side outward by ``e`` times that axis's side length. If ``P`` was predicted
with IoU at least ``t`` against the true box ``G``, enlarging by
``min_enlargement(t)`` is guaranteed to cover ``G``.

:func:`oracle_min_enlargement` recovers the same factor by brute-force grid
search, independently of the closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np


class InvalidIoUBound(ValueError):
    pass


class DegenerateBox(ValueError):
    pass


@dataclass(frozen=True)
class Box2D:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise DegenerateBox(f"box {self.as_tuple()} has no area")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x_min + self.x_max) / 2, (self.y_min + self.y_max) / 2)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)

    def contains(self, other: "Box2D", tol: float = 0.0) -> bool:
        return (
            self.x_min <= other.x_min + tol
            and self.y_min <= other.y_min + tol
            and other.x_max <= self.x_max + tol
            and other.y_max <= self.y_max + tol
        )


@dataclass(frozen=True)
class Detection:
    box: Box2D
    positive: bool = True
    score: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")

    def as_tuple(self) -> tuple[float, ...]:
        return self.box.as_tuple() + (1.0 if self.positive else 0.0, self.score)

    @classmethod
    def from_tuple(cls, values: Sequence[float]) -> "Detection":
        return cls(Box2D(*values[:4]), bool(values[4]), float(values[5]))


def iou(a: Box2D, b: Box2D) -> float:
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def enlarge(box: Box2D, e: float) -> Box2D:
    if e < 0:
        raise ValueError(f"enlargement factor must be >= 0, got {e}")
    dx, dy = e * box.width, e * box.height
    return Box2D(box.x_min - dx, box.y_min - dy, box.x_max + dx, box.y_max + dy)


def _check_iou_bound(t: float) -> None:
    if not 0.0 < t <= 1.0:
        raise InvalidIoUBound(f"IoU bound must lie in (0, 1], got {t}")


def min_enlargement(t: float) -> float:
    """Smallest per-side factor covering every box with IoU >= ``t``.

    The worst case stretches ``G`` along one axis while keeping the other
    aligned with ``P``: IoU ``1 / (1 + h)`` for an overhang ``h``.
    """
    _check_iou_bound(t)
    return 1.0 / t - 1.0


def required_enlargement(p: Box2D, g: Box2D) -> float:
    """Smallest ``e`` with ``g`` inside ``enlarge(p, e)``."""
    return max(
        0.0,
        (p.x_min - g.x_min) / p.width,
        (g.x_max - p.x_max) / p.width,
        (p.y_min - g.y_min) / p.height,
        (g.y_max - p.y_max) / p.height,
    )


def safety_postprocess(detections: Iterable[Detection], t: float) -> list[Detection]:
    """Enlarge positive detections; negatives pass through untouched."""
    e = min_enlargement(t)
    return [replace(d, box=enlarge(d.box, e)) if d.positive else d for d in detections]


# -- vectorized helpers (rows are x_min, y_min, x_max, y_max) ----------------


def iou_arrays(p: np.ndarray, g: np.ndarray) -> np.ndarray:
    iw = np.clip(np.minimum(p[:, 2], g[:, 2]) - np.maximum(p[:, 0], g[:, 0]), 0, None)
    ih = np.clip(np.minimum(p[:, 3], g[:, 3]) - np.maximum(p[:, 1], g[:, 1]), 0, None)
    inter = iw * ih
    area_p = (p[:, 2] - p[:, 0]) * (p[:, 3] - p[:, 1])
    area_g = (g[:, 2] - g[:, 0]) * (g[:, 3] - g[:, 1])
    return inter / (area_p + area_g - inter)


def enlarge_arrays(p: np.ndarray, e: float) -> np.ndarray:
    dx = e * (p[:, 2] - p[:, 0])
    dy = e * (p[:, 3] - p[:, 1])
    return np.stack([p[:, 0] - dx, p[:, 1] - dy, p[:, 2] + dx, p[:, 3] + dy], axis=1)


def contained_arrays(outer: np.ndarray, inner: np.ndarray, tol: float = 0.0) -> np.ndarray:
    return (
        (outer[:, 0] <= inner[:, 0] + tol)
        & (outer[:, 1] <= inner[:, 1] + tol)
        & (inner[:, 2] <= outer[:, 2] + tol)
        & (inner[:, 3] <= outer[:, 3] + tol)
    )


# -- grid-search oracle -----------------------------------------------------
#
# P is fixed to the unit square: IoU and containment are invariant under common
# translation and per-axis positive scaling, so this loses no generality. The
# search maximizes the vertical overhang of G; the horizontal case is its
# mirror image under swapping axes.


def _axis_pairs(lows: np.ndarray, highs: np.ndarray):
    lo, hi = np.meshgrid(lows, highs, indexing="ij")
    mask = lo < hi
    lo, hi = lo[mask], hi[mask]
    inter = np.clip(np.minimum(hi, 1.0) - np.maximum(lo, 0.0), 0.0, None)
    width = hi - lo
    over = np.maximum(np.maximum(-lo, hi - 1.0), 0.0)
    return lo, hi, inter, width, over


def _frontier(inter: np.ndarray, width: np.ndarray) -> np.ndarray:
    """Indices of x-extents not dominated by another (narrower, more overlap)."""
    order = np.lexsort((-inter, width))
    best = np.maximum.accumulate(inter[order])
    keep = np.empty(len(order), dtype=bool)
    keep[0] = inter[order[0]] > 0
    keep[1:] = inter[order[1:]] > best[:-1]
    return order[keep]


def _grid_search(x_lo, x_hi, y_lo, y_hi, t: float, chunk: int = 4096):
    """Exhaustive search over the product grid, pruned by dominance in x.

    Returns ``(overhang, witness)`` or ``(0.0, None)`` if nothing is feasible.
    """
    xl, xh, ix, wx, _ = _axis_pairs(np.asarray(x_lo, float), np.asarray(x_hi, float))
    keep = _frontier(ix, wx)
    xl, xh, ix, wx = xl[keep], xh[keep], ix[keep], wx[keep]
    yl, yh, iy, wy, oy = _axis_pairs(np.asarray(y_lo, float), np.asarray(y_hi, float))
    best_over, witness = 0.0, None
    slack = 1e-12
    # IoU >= t  <=>  (1 + t) * inter - t * (area_g) >= t  with area_p = 1
    for start in range(0, len(yl), chunk):
        sl = slice(start, start + chunk)
        score = (1.0 + t) * np.outer(ix, iy[sl]) - t * np.outer(wx, wy[sl])
        arg = np.argmax(score, axis=0)
        feasible = score[arg, np.arange(score.shape[1])] >= t - slack
        if not feasible.any():
            continue
        cand = np.where(feasible, oy[sl], -1.0)
        j = int(np.argmax(cand))
        if cand[j] > best_over or witness is None:
            best_over = float(cand[j])
            i = int(arg[j])
            witness = (float(xl[i]), float(yl[sl][j]), float(xh[i]), float(yh[sl][j]))
    return best_over, witness


def _coarse_grid(t: float, n: int) -> np.ndarray:
    grid = np.linspace(-1.0 / t - 1.0, 1.0 / t + 2.0, n)
    return np.union1d(grid, [0.0, 1.0])


def oracle_witness(t: float, grid: int = 200, refine: int = 4) -> tuple[float, Box2D]:
    """Grid-search estimate of the minimal enlargement with a worst-case box.

    A coarse grid of ``grid`` points per coordinate is searched first, then
    ``refine`` zoom rounds re-grid a small window around each coordinate of
    the best box found so far.
    """
    _check_iou_bound(t)
    if grid < 100:
        raise ValueError(f"grid resolution must be >= 100, got {grid}")
    return _oracle(t, grid, refine)


def _oracle(t: float, n: int, refine: int) -> tuple[float, Box2D]:
    coarse = _coarse_grid(t, n)
    best, wit = _grid_search(coarse, coarse, coarse, coarse, t)
    if t == 1.0 or wit is None:
        return 0.0, Box2D(0.0, 0.0, 1.0, 1.0)
    step = (coarse[-1] - coarse[0]) / (n - 1)
    for _ in range(refine):
        radius = 3.0 * step
        axes = [np.union1d(np.linspace(c - radius, c + radius, n), [c]) for c in wit]
        value, cand = _grid_search(axes[0], axes[2], axes[1], axes[3], t)
        if cand is not None and value >= best:
            best, wit = value, cand
        step = 2.0 * radius / (n - 1)
    return best, Box2D(*wit)


def oracle_min_enlargement(t: float, grid: int = 200, refine: int = 4) -> float:
    return oracle_witness(t, grid, refine)[0]


def escapes(witness: Box2D, e: float) -> bool:
    """Whether ``witness`` sticks out of the unit square enlarged by ``e``."""
    return not enlarge(Box2D(0.0, 0.0, 1.0, 1.0), e).contains(witness)
