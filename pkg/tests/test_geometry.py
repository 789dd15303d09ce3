import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aegispat.geometry import (
    Box2D,
    DegenerateBox,
    Detection,
    InvalidIoUBound,
    _grid_search,
    contained_arrays,
    enlarge,
    enlarge_arrays,
    escapes,
    iou,
    iou_arrays,
    min_enlargement,
    oracle_min_enlargement,
    oracle_witness,
    required_enlargement,
    safety_postprocess,
)

coord = st.floats(-100, 100, allow_nan=False)
size = st.floats(0.01, 50, allow_nan=False)


@st.composite
def boxes(draw):
    x, y, w, h = draw(coord), draw(coord), draw(size), draw(size)
    return Box2D(x, y, x + w, y + h)


def test_iou_basics():
    a = Box2D(0, 0, 2, 2)
    assert iou(a, a) == 1.0
    assert iou(a, Box2D(3, 3, 4, 4)) == 0.0
    assert iou(a, Box2D(1, 0, 3, 2)) == pytest.approx(1 / 3)


def test_degenerate_box_rejected():
    with pytest.raises(DegenerateBox):
        Box2D(0, 0, 0, 1)


@given(boxes(), boxes())
def test_iou_symmetric_and_bounded(a, b):
    assert iou(a, b) == pytest.approx(iou(b, a))
    assert 0.0 <= iou(a, b) <= 1.0


@given(boxes(), boxes(), st.floats(-10, 10), st.floats(-10, 10), st.floats(0.1, 10), st.floats(0.1, 10))
def test_iou_invariant_under_translation_and_axis_scaling(a, b, dx, dy, sx, sy):
    def f(box):
        return Box2D(box.x_min * sx + dx, box.y_min * sy + dy, box.x_max * sx + dx, box.y_max * sy + dy)

    assert iou(f(a), f(b)) == pytest.approx(iou(a, b), abs=1e-9)


@pytest.mark.parametrize("t, e", [(0.5, 1.0), (0.8, 0.25), (1.0, 0.0)])
def test_min_enlargement_closed_form(t, e):
    assert min_enlargement(t) == pytest.approx(e)


@pytest.mark.parametrize("t", [0.0, -0.1, 1.1, math.nan])
def test_invalid_iou_bound(t):
    with pytest.raises(InvalidIoUBound):
        min_enlargement(t)


@given(boxes(), st.floats(0.05, 1.0))
def test_worst_case_box_needs_exactly_the_bound(p, t):
    # G aligned with P in x, overhanging in y by h: IoU = 1 / (1 + h)
    h = 1.0 / t - 1.0
    g = Box2D(p.x_min, p.y_min, p.x_max, p.y_max + h * p.height)
    assert iou(p, g) == pytest.approx(t, rel=1e-9)
    assert required_enlargement(p, g) == pytest.approx(min_enlargement(t), rel=1e-9, abs=1e-12)


@given(boxes(), boxes())
def test_enlarging_by_bound_of_actual_iou_contains(p, g):
    t = iou(p, g)
    if t < 1e-3:
        return
    grown = enlarge(p, min_enlargement(t))
    assert grown.contains(g, tol=1e-9 * (1 + max(map(abs, g.as_tuple() + p.as_tuple()))))


def test_required_enlargement_zero_when_inside():
    assert required_enlargement(Box2D(0, 0, 4, 4), Box2D(1, 1, 2, 2)) == 0.0


def test_enlarge_negative_rejected():
    with pytest.raises(ValueError):
        enlarge(Box2D(0, 0, 1, 1), -0.1)


def test_safety_postprocess_leaves_negatives():
    dets = [Detection(Box2D(0, 0, 1, 1), True, 0.9), Detection(Box2D(0, 0, 1, 1), False, 0.2)]
    out = safety_postprocess(dets, 0.5)
    assert out[0].box == Box2D(-1, -1, 2, 2)
    assert out[1] == dets[1]


def test_array_helpers_match_scalar():
    rng = np.random.default_rng(1)
    xy = rng.uniform(-5, 5, (200, 2))
    wh = rng.uniform(0.1, 3, (200, 2))
    p = np.hstack([xy, xy + wh])
    g = p + rng.uniform(-0.5, 0.5, (200, 4)) * np.hstack([wh, wh]) * 0.3
    ious = iou_arrays(p, g)
    grown = enlarge_arrays(p, 0.3)
    inside = contained_arrays(grown, g)
    for k in range(200):
        P, G = Box2D(*p[k]), Box2D(*g[k])
        assert ious[k] == pytest.approx(iou(P, G))
        assert inside[k] == enlarge(P, 0.3).contains(G)


def _brute_force(grid, t):
    best = 0.0
    for x0, x1, y0, y1 in itertools.product(grid, repeat=4):
        if x0 >= x1 or y0 >= y1:
            continue
        g = Box2D(x0, y0, x1, y1)
        if iou(Box2D(0, 0, 1, 1), g) >= t - 1e-12:
            best = max(best, -y0, y1 - 1.0)
    return best


@pytest.mark.parametrize("t", [0.3, 0.5, 0.7, 0.9])
def test_pruned_grid_search_matches_brute_force(t):
    grid = np.union1d(np.linspace(-1.0 / t, 1.0 / t + 1.0, 11), [0.0, 1.0])
    pruned, _ = _grid_search(grid, grid, grid, grid, t)
    assert pruned == pytest.approx(_brute_force(grid, t), abs=1e-12)


@pytest.mark.parametrize("t", [0.3, 0.5, 0.7, 0.9])
@pytest.mark.parametrize("n", [100, 300])
def test_oracle_agrees_with_closed_form(t, n):
    assert abs(oracle_min_enlargement(t, grid=n) - min_enlargement(t)) <= 2.0 / n


def test_oracle_never_exceeds_closed_form():
    for t in (0.3, 0.6, 0.95):
        found, witness = oracle_witness(t)
        assert found <= min_enlargement(t) + 1e-9
        assert not escapes(witness, min_enlargement(t) + 1e-9)


def test_oracle_trivial_bound_and_resolution_check():
    assert oracle_witness(1.0)[0] == 0.0
    with pytest.raises(ValueError):
        oracle_witness(0.5, grid=10)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.2, 0.95))
def test_witness_escapes_slightly_smaller_enlargement(t):
    _, witness = oracle_witness(t, grid=100)
    assert iou(Box2D(0, 0, 1, 1), witness) >= t - 1e-9
    assert escapes(witness, min_enlargement(t) - 0.05)
