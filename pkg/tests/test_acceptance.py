"""Acceptance criteria, one test (or group) per criterion."""

from __future__ import annotations

import copy
import json
import math
import time
from importlib import resources

import numpy as np
import pytest

from aegispat.assurance import AllocationNode, AllocationRequest, DalLevel, check_credit_once, has_violation, validate_allocation
from aegispat.core import FunctionComponent, Role, Signal, Source, run
from aegispat.faults import FaultSpec, Guideword, Schedule, bind_faults
from aegispat.geometry import (
    Box2D,
    contained_arrays,
    enlarge_arrays,
    escapes,
    iou,
    iou_arrays,
    min_enlargement,
    oracle_witness,
)
from aegispat.harness import run_scenario, scenario_from_dict
from aegispat.patterns import (
    MonitorMode,
    MonitorSpec,
    effective_threshold,
    make_active_monitor,
    make_backup_parallel,
    make_input_partitioning,
    make_rta,
    make_single_channel,
    make_tmr,
    make_value_override,
)
from aegispat.surrogate import BackupSurrogate, ComplexSurrogate, ErrorModel, LinearMap, OddRegion, SurrogateProfile

THRESHOLDS = (0.3, 0.5, 0.7, 0.9)


# -- 1. containment -----------------------------------------------------------


def _pairs_with_iou_at_least(t: float, n: int, rng: np.random.Generator):
    """Random (P, G) pairs with iou >= t: edge jitter, plus pairs stretched
    along one axis towards the worst case."""
    ps, gs, have = [], [], 0
    reach = 1.0 / t - 1.0
    while have < n:
        m = 4 * n
        x0 = rng.uniform(-50, 50, m)
        y0 = rng.uniform(-50, 50, m)
        w = rng.uniform(0.1, 20, m)
        h = rng.uniform(0.1, 20, m)
        p = np.stack([x0, y0, x0 + w, y0 + h], axis=1)
        jitter = rng.uniform(-reach, reach, (m, 4)) * np.stack([w, h, w, h], axis=1)
        g = p + jitter
        # a quarter of the samples: G keeps P's x extent and overhangs in y
        k = m // 4
        over = rng.uniform(0, reach, k) * h[:k]
        g[:k] = p[:k]
        g[:k, 3] = p[:k, 3] + over
        ok = (g[:, 0] < g[:, 2]) & (g[:, 1] < g[:, 3])
        p, g = p[ok], g[ok]
        keep = iou_arrays(p, g) >= t
        ps.append(p[keep])
        gs.append(g[keep])
        have += int(keep.sum())
    return np.concatenate(ps)[:n], np.concatenate(gs)[:n]


@pytest.mark.acceptance(1, "containment")
def test_containment_theorem_suite():
    rng = np.random.default_rng(20240601)
    start = time.perf_counter()
    for t in THRESHOLDS:
        p, g = _pairs_with_iou_at_least(t, 100_000, rng)
        assert len(p) == 100_000
        assert (iou_arrays(p, g) >= t).all()
        grown = enlarge_arrays(p, min_enlargement(t))
        scale = np.abs(np.concatenate([p, g])).max()
        violations = int((~contained_arrays(grown, g, tol=1e-12 * scale)).sum())
        assert violations == 0, f"t={t}: {violations} pairs escape"
    assert time.perf_counter() - start < 30.0


# -- 2. minimality -------------------------------------------------------------


@pytest.mark.acceptance(2, "minimality")
@pytest.mark.parametrize("t", THRESHOLDS)
def test_minimality_and_oracle_agreement(t):
    n = 200
    found, witness = oracle_witness(t, grid=n)
    unit = Box2D(0.0, 0.0, 1.0, 1.0)
    assert iou(unit, witness) >= t - 1e-9
    e = min_enlargement(t)
    assert escapes(witness, e - 1e-3)
    assert abs(e - found) <= 2.0 / n


# -- 3. DAL truth table --------------------------------------------------------


def _profile():
    return SurrogateProfile(1, LinearMap(((2.0,),), (0.5,)), ((OddRegion(((0.0, 1.0),)), ErrorModel()),))


def _parts():
    prof = _profile()
    return (
        ComplexSurrogate(id="complex", profile=prof),
        BackupSurrogate(id="backup", reference=prof.reference),
        MonitorSpec(MonitorMode.INPUT_RANGE, ranges=((0.0, 1.0),)),
        MonitorSpec(MonitorMode.OUTPUT_VALIDITY, reference=prof.reference, tolerance=0.1),
    )


def _verdict(instance, allocated, by_role, **flags):
    node = AllocationRequest("f", DalLevel.parse(allocated), {Role(k): v for k, v in by_role.items()}, **flags)
    return "accept" if not has_violation(validate_allocation(instance, node.node_for(instance))) else "reject"


def _dal_cases():
    cx, bk, in_mon, out_mon = _parts()
    single = make_single_channel(cx)
    active = make_active_monitor(cx, in_mon)
    backup = make_backup_parallel(cx, bk, p_selftest=0.9)
    rta = make_rta(cx, [out_mon], [bk])
    inside = make_rta(cx, [out_mon], [bk], boundary="monitor_inside")
    other = ComplexSurrogate(id="channel1", profile=_profile())
    parts = make_input_partitioning(
        [(cx, [OddRegion(((0.0, 0.5),))]), (other, [OddRegion(((0.5, 1.0),))])],
        MonitorSpec(MonitorMode.INPUT_RANGE, ranges=((0.0, 1.0),)),
    )
    wrapper_a = {"monitor": "A", "switch": "A", "alternative": "A"}

    def credit_tree(nested_credit: bool, siblings: bool):
        leaf = lambda name, credit: AllocationNode(name, DalLevel.A, "rta", credit_taken=credit)  # noqa: E731
        if siblings:
            kids = (leaf("item1", True), leaf("item2", True))
            return AllocationNode("system", DalLevel.A, "combined", credit_taken=False, children=kids)
        return AllocationNode("system", DalLevel.A, "combined", credit_taken=True,
                              children=(leaf("item", nested_credit),))

    return [
        ("single channel, complex at A", lambda: _verdict(single, "A", {"complex": "A"}), "accept"),
        ("single channel, complex at C", lambda: _verdict(single, "A", {"complex": "C"}), "reject"),
        ("active monitor, monitor A / complex C",
         lambda: _verdict(active, "A", {"monitor": "A", "switch": "A", "complex": "C"}), "accept"),
        ("backup parallel, primary A / backup C, independent",
         lambda: _verdict(backup, "A", {"complex": "A", "backup": "C", "switch": "A"}, independent=True), "accept"),
        ("backup parallel, primary C / backup A, independent",
         lambda: _verdict(backup, "A", {"complex": "C", "backup": "A", "switch": "A"}, independent=True), "accept"),
        ("rta, wrapper A / complex C", lambda: _verdict(rta, "A", {**wrapper_a, "complex": "C"}), "accept"),
        ("rta, monitor C / complex A",
         lambda: _verdict(rta, "A", {**wrapper_a, "monitor": "C", "complex": "A"}), "reject"),
        ("rta, monitor inside the complex boundary",
         lambda: _verdict(inside, "A", {**wrapper_a, "complex": "C", "preprocess": "C", "postprocess": "C"}),
         "reject"),
        ("input partitioning, everything at A",
         lambda: _verdict(parts, "A", {"selector": "A", "complex": "A", "alternative": "A"}), "accept"),
        ("input partitioning, one channel at C",
         lambda: _verdict(parts, "A", {"selector": "A", "complex": "C", "alternative": "A"}), "reject"),
        ("credit taken at system level and nested item",
         lambda: "reject" if check_credit_once(credit_tree(True, False)) else "accept", "reject"),
        ("credits on sibling subtrees",
         lambda: "reject" if check_credit_once(credit_tree(False, True)) else "accept", "accept"),
    ]


@pytest.mark.acceptance(3, "DAL truth table")
def test_dal_truth_table():
    cases = _dal_cases()
    assert len(cases) == 12
    mismatches = [(name, got, want) for name, fn, want in cases if (got := fn()) != want]
    assert not mismatches, mismatches


# -- 4. pattern benefit under a fault campaign ---------------------------------

WORLD = {
    "schema_version": 1,
    "seed": 4242,
    "horizon_ticks": 120,
    "ticks_per_hour": 60,
    "input": {"kind": "ramp", "start": [0.0], "stop": [1.0], "period": 40},
    "surrogate": {
        "input_dim": 1,
        "reference": {"kind": "linear", "weights": [[2.0]], "bias": [0.5]},
        "regions": [{"bounds": [[0.0, 1.0]], "error": {}}],
        "ood": {"p_erroneous": 1.0},
    },
    "backup": {"mode": "equivalent"},
    "pattern": {"kind": "single_channel"},
    "envelope": {"kind": "abs_deviation", "epsilon": 0.1},
}

CAMPAIGN = [
    {"guideword": "omission", "target": ["complex", "y"], "schedule": {"interval": [20, 24]}},
    {"guideword": "commission", "target": ["complex", "y"], "schedule": {"ticks": [30]}, "params": {"value": 9.0}},
    {"guideword": "early", "target": ["complex", "y"], "schedule": {"ticks": [40]}, "params": {"delay": 2}},
    {"guideword": "late", "target": ["complex", "y"], "schedule": {"interval": [50, 52]}, "params": {"delay": 3}},
    {"guideword": "value", "target": ["complex", "y"], "schedule": {"ticks": [60, 61]}, "params": {"offset": 5.0}},
]

PERFECT_MONITOR = {"mode": "output_validity", "reference": True, "tolerance": 1e-6, "staleness": 0}


def _run(pattern, faults=(), **world):
    data = copy.deepcopy(WORLD)
    data.update(copy.deepcopy(world))
    data["pattern"] = pattern
    data["faults"] = list(faults)
    report, _ = run_scenario(scenario_from_dict(data))
    return report.metrics


def _campaign(pattern):
    per = [_run(pattern, [fault]) for fault in CAMPAIGN]
    return sum(m.hazards for m in per), sum(m.switch_events for m in per), per


@pytest.mark.acceptance(4, "pattern benefit")
def test_campaign_single_channel_vs_rta():
    single_hazards, _, _ = _campaign({"kind": "single_channel"})
    rta_hazards, rta_switches, per = _campaign({"kind": "rta", "monitors": [PERFECT_MONITOR]})
    assert single_hazards >= 1
    assert rta_hazards == 0
    assert rta_switches >= 1
    assert all(m.switch_events >= 1 for m in per), "every guideword should trip the perfect monitor"


IN_DOMAIN_VALUE_FAULT = [
    {"guideword": "value", "target": ["complex", "y"], "schedule": {"ticks": [10, 11]}, "params": {"offset": 5.0}}
]
IN_RANGE_VALUE_FAULT = [
    {"guideword": "value", "target": ["complex", "y"], "schedule": {"ticks": [10, 11]}, "params": {"offset": 0.4}}
]
OOD_EXCURSION = {"kind": "ramp", "start": [0.0], "stop": [1.0], "period": 40,
                 "excursions": [{"interval": [70, 74], "value": [1.5]}]}


@pytest.mark.acceptance(4, "pattern benefit")
def test_combined_input_monitor_masks_domain_departures_only():
    pattern = {"kind": "combined", "variant": "input_monitor",
               "monitor": {"mode": "odd_conformance", "regions": "surrogate"}}
    assert _run({"kind": "single_channel"}, input=OOD_EXCURSION).hazards > 0
    assert _run(pattern, input=OOD_EXCURSION).hazards == 0
    assert _run(pattern, IN_DOMAIN_VALUE_FAULT).hazards > 0


@pytest.mark.acceptance(4, "pattern benefit")
def test_combined_output_monitor_masks_what_it_judges_only():
    # valid output range of the reference over the domain is [0.5, 2.5]
    pattern = {"kind": "combined", "variant": "output_monitor",
               "monitor": {"mode": "output_validity", "ranges": [[0.5, 2.5]], "staleness": 0}}
    detectable = [f for f in CAMPAIGN if f["guideword"] != "late"] + [
        {"guideword": "late", "target": ["complex", "y"], "schedule": {"interval": [50, 52]}, "params": {"delay": 3}}
    ]
    single, _, _ = _campaign({"kind": "single_channel"})
    assert single > 0
    assert sum(_run(pattern, [f]).hazards for f in detectable) == 0
    assert _run(pattern, input=OOD_EXCURSION).hazards == 0  # out-of-domain errors land out of range
    assert _run(pattern, IN_RANGE_VALUE_FAULT).hazards > 0


@pytest.mark.acceptance(4, "pattern benefit")
def test_combined_independent_channel_masks_environment_departures_only():
    world = {
        "input": {"kind": "uniform", "low": [0.0, 0.6], "high": [1.0, 1.0],
                  "excursions": [{"interval": [60, 89], "value": [0.5, 0.2]}]},
        "env": {"kind": "from_input", "dims": [1]},
        "surrogate": {
            "input_dim": 2,
            "reference": {"kind": "linear", "weights": [[2.0, 0.0]], "bias": [0.5]},
            "regions": [{"bounds": [[0.0, 1.0], [0.5, 1.0]], "error": {}}],
            "ood": {"p_erroneous": 1.0},
        },
    }
    pattern = {"kind": "combined", "variant": "independent_channel",
               "monitor": {"mode": "odd_conformance", "regions": [{"bounds": [[0.5, 1.0]]}]}}
    assert _run({"kind": "single_channel"}, **world).hazards > 0
    assert _run(pattern, **world).hazards == 0
    no_excursion = copy.deepcopy(world)
    del no_excursion["input"]["excursions"]
    assert _run(pattern, IN_DOMAIN_VALUE_FAULT, **no_excursion).hazards > 0


# -- 5. Monte Carlo calibration ------------------------------------------------


@pytest.mark.acceptance(5, "Monte Carlo calibration")
def test_monte_carlo_calibration():
    p, tph, trials = 1e-4, 3600, 1000
    data = {
        "schema_version": 1,
        "seed": 99,
        "horizon_ticks": tph,
        "ticks_per_hour": tph,
        "input": {"kind": "uniform", "low": [0.0], "high": [1.0]},
        "surrogate": {
            "input_dim": 1,
            "reference": {"kind": "linear", "weights": [[2.0]], "bias": [0.5]},
            "regions": [{"bounds": [[0.0, 1.0]], "error": {"p_erroneous": p}}],
        },
        "pattern": {"kind": "single_channel"},
        "envelope": {"kind": "abs_deviation", "epsilon": 0.1},
        "monte_carlo": {"trials": trials},
    }
    start = time.perf_counter()
    report, _ = run_scenario(scenario_from_dict(data))
    elapsed = time.perf_counter() - start
    expected = 1.0 - (1.0 - p) ** tph
    sigma = math.sqrt(expected * (1 - expected) / trials)
    rate = report.failure_rate
    assert rate.hours == trials
    assert abs(rate.rate - expected) <= 3 * sigma, (rate.rate, expected, sigma)
    assert rate.lower <= rate.rate <= rate.upper
    assert elapsed < 120.0, elapsed


# -- 6. determinism ---------------------------------------------------------------


def _bundled():
    root = resources.files("aegispat") / "scenarios"
    return sorted((p.name, p.read_text()) for p in root.iterdir() if p.name.endswith(".json"))


@pytest.mark.acceptance(6, "determinism")
def test_bundled_reports_are_byte_identical():
    bundled = _bundled()
    assert len(bundled) >= 9
    kinds = set()
    for name, text in bundled:
        data = json.loads(text)
        kinds.add(data["pattern"]["kind"])
        first = run_scenario(scenario_from_dict(data))[0].to_json()
        second = run_scenario(scenario_from_dict(json.loads(text)))[0].to_json()
        assert first.encode() == second.encode(), name
    assert kinds == {"single_channel", "active_monitor", "backup_parallel", "combined", "rta",
                     "value_override", "function_modification", "input_partitioning", "tmr"}


# -- 7. value overriding --------------------------------------------------------

WORST = -1.0
LEVELS = (("low", 0.5), ("medium", 0.35), ("high", 0.2))


def _estimator():
    def fn(inputs, tick):
        x = inputs["x"]
        return {"y": Signal(x.value[0], True, tick), "u": Signal(x.value[1], True, tick)}

    return FunctionComponent(id="estimator", role=Role.COMPLEX, inputs=("x",), outputs=("y", "u"), fn=fn)


def _override_run(n, adaptive, threshold, risk_labels):
    src = Source(id="input", generator=lambda t, rng: (rng.uniform(0, 100), rng.uniform(0, 1)))
    risk = Source(id="risk", generator=lambda t, rng: rng.choice(risk_labels))
    inst = make_value_override(_estimator(), threshold=threshold, worst_case=WORST,
                               adaptive=adaptive, source=src, risk=risk if adaptive else None)
    trace = run(inst.topology, n, seed=7)
    return trace.port("input", "x"), trace.port("risk", "x") if adaptive else None, trace.port(*inst.output)


@pytest.mark.acceptance(7, "value overriding")
def test_no_output_above_threshold_escapes_override():
    n = 10_000
    for adaptive, threshold in ((None, 0.3), (LEVELS, 0.0)):
        inputs, risks, outputs = _override_run(n, adaptive, threshold, [label for label, _ in LEVELS])
        bad = 0
        for k in range(n):
            y, u = inputs[k].value
            limit = threshold if adaptive is None else effective_threshold(LEVELS, risks[k].value)
            out = outputs[k]
            if u > limit:
                bad += int(not (out.value == WORST and "overridden" in out.tags))
            else:
                bad += int(out.value != y or "overridden" in out.tags)
        assert bad == 0


@pytest.mark.acceptance(7, "value overriding")
def test_adaptive_never_overrides_what_the_low_risk_variant_passes():
    n = 10_000
    labels = [label for label, _ in LEVELS]
    inputs, risks, adaptive_out = _override_run(n, LEVELS, 0.0, labels)
    _, _, low_out = _override_run(n, None, LEVELS[0][1], labels)
    _, _, strict_out = _override_run(n, None, LEVELS[-1][1], labels)
    low_ticks = 0
    for k in range(n):
        adaptive_overrides = "overridden" in adaptive_out[k].tags
        low_overrides = "overridden" in low_out[k].tags
        strict_overrides = "overridden" in strict_out[k].tags
        if risks[k].value == "low":
            low_ticks += 1
            assert adaptive_overrides == low_overrides
        # at any risk the adaptive decision lies between the two fixed thresholds
        assert low_overrides <= adaptive_overrides <= strict_overrides
    assert low_ticks > 1000


# -- 8. TMR masking ------------------------------------------------------------------


@pytest.mark.acceptance(8, "TMR masking")
@pytest.mark.parametrize("voter", ["majority_exact", "median"])
def test_tmr_masks_every_single_replica_value_fault(voter):
    ticks = 1000
    prof = _profile()
    replicas = [BackupSurrogate(id=f"r{k}", role=Role.COMPLEX, reference=prof.reference) for k in range(3)]
    src = Source(id="input", generator=lambda t, rng: (rng.uniform(0, 1),))
    inst = make_tmr(replicas, voter=voter, source=src)
    clean = run(inst.topology, ticks, seed=3).port(*inst.output)
    corruptions = [{"offset": 1e-3}, {"offset": -1.0}, {"offset": 1e6}, {"value": 0.0}, {"value": float("nan")}]
    schedules = [lambda k: Schedule.between(0, ticks - 1)] + [
        lambda k: Schedule(ticks=frozenset(t for t in range(ticks) if t % 3 == k))  # rotating faulty replica
    ]
    runs = 0
    for k in range(3):
        for corruption in corruptions:
            for schedule in schedules:
                spec = FaultSpec(Guideword.VALUE, (f"r{k}", "y"), schedule(k), **corruption)
                out = run(inst.topology, ticks, seed=3, injectors=bind_faults(inst.topology, [spec], 3))
                got = out.port(*inst.output)
                assert all(g.valid and g.value == c.value for g, c in zip(got, clean)), (k, corruption)
                runs += 1
    assert runs == 3 * len(corruptions) * len(schedules)
