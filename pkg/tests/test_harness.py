import copy
import json
from importlib import resources

import pytest

from aegispat.core import Signal, Trace
from aegispat.harness import (
    Metrics,
    SafetyEnvelope,
    compare_patterns,
    compute_metrics,
    run_scenario,
    scenario_from_dict,
    wilson_interval,
)
from aegispat.harness.metrics import classify, merge
from aegispat.harness.report import json_lines, table
from aegispat.harness.runner import SEED_ENV, effective_seed, trial_seed
from aegispat.harness.scenario import make_stream
from aegispat.schemas import SchemaError

REF = lambda x: 2.0 * x[0] + 0.5  # noqa: E731


def bundled(name):
    return json.loads((resources.files("aegispat") / "scenarios" / f"{name}.json").read_text())


BASE = {
    "schema_version": 1,
    "seed": 11,
    "horizon_ticks": 60,
    "ticks_per_hour": 20,
    "input": {"kind": "ramp", "start": [0.0], "stop": [1.0], "period": 20},
    "surrogate": {
        "input_dim": 1,
        "reference": {"kind": "linear", "weights": [[2.0]], "bias": [0.5]},
        "regions": [{"bounds": [[0.0, 1.0]], "error": {"p_erroneous": 0.05}}],
    },
    "pattern": {"kind": "single_channel"},
    "envelope": {"kind": "abs_deviation", "epsilon": 0.1},
}


def scenario(**changes):
    data = copy.deepcopy(BASE)
    data.update(changes)
    return scenario_from_dict(data)


# -- envelopes and metrics --------------------------------------------------------


def test_abs_deviation_sides():
    both = SafetyEnvelope("abs_deviation", 0.1)
    upper = SafetyEnvelope("abs_deviation", 0.1, side="upper")
    lower = SafetyEnvelope("abs_deviation", 0.1, side="lower")
    truth = (0.5,)  # reference 1.5
    assert both.violates(1.7, truth, REF) and both.violates(1.3, truth, REF)
    assert upper.violates(1.7, truth, REF) and not upper.violates(1.3, truth, REF)
    assert lower.violates(1.3, truth, REF) and not lower.violates(1.7, truth, REF)
    assert not both.violates(1.55, truth, REF)


def test_range_and_box_envelopes():
    rng = SafetyEnvelope("range", lo=0.0, hi=1.0)
    assert rng.violates(1.5, None, None) and not rng.violates(0.5, None, None)
    box = SafetyEnvelope("box_containment")
    truth = (0.0, 0.0, 1.0, 1.0)
    assert not box.violates((-1.0, -1.0, 2.0, 2.0, 1.0, 0.9), truth, None)
    assert box.violates((0.2, 0.0, 2.0, 2.0, 1.0, 0.9), truth, None)
    assert box.violates((-1.0, -1.0, 2.0, 2.0, 0.0, 0.9), truth, None)  # negative detection


@pytest.mark.parametrize("kwargs", [dict(kind="nope"), dict(kind="abs_deviation", epsilon=-1),
                                    dict(kind="range", lo=1, hi=0), dict(kind="abs_deviation", side="x")])
def test_invalid_envelopes(kwargs):
    with pytest.raises(ValueError):
        SafetyEnvelope(**kwargs)


def test_classify_hazard_loss_ok():
    env = SafetyEnvelope("abs_deviation", 0.1)
    outs = [Signal(1.5, True, 0), None, Signal(9.0, False, 2), Signal(9.0, True, 3)]
    assert classify(outs, [(0.5,)] * 4, env, REF) == ["ok", "loss", "loss", "hazard"]


def test_hour_windows_drop_partial_tail():
    env = SafetyEnvelope("abs_deviation", 0.1)
    outs = [Signal(9.0 if t in (1, 2, 25) else 1.5, True, t) for t in range(25)] + [Signal(9.0, True, 25)]
    trace = Trace([(t, "c", "y", s) for t, s in enumerate(outs)])
    m, hazards = compute_metrics(trace, env, ("c", "y"), [(0.5,)] * 26, REF, ticks_per_hour=10)
    assert hazards == [1, 2, 25]
    assert m.hours == 2 and m.failing_hours == 1 and m.hazards == 3


def test_metrics_are_additive():
    a = Metrics(ticks=10, hazards=1, loss=2, hours=1, failing_hours=1)
    b = Metrics(ticks=5, loss=1, backup_ticks=3)
    total = merge([a, b])
    assert total == a + b == b + a
    assert total.ok == 11 and total.availability == pytest.approx(0.8) and total.backup_active == pytest.approx(0.2)


def test_wilson_interval():
    r = wilson_interval(30, 100)
    assert r.rate == 0.3 and r.lower < 0.3 < r.upper
    assert r.lower == pytest.approx(0.2189, abs=1e-3) and r.upper == pytest.approx(0.3958, abs=1e-3)
    assert wilson_interval(0, 0).hours == 0


# -- streams and scenarios ------------------------------------------------------------


def test_streams():
    import random

    rng = random.Random(0)
    ramp = make_stream({"kind": "ramp", "start": [0.0], "stop": [1.0], "period": 3}, 1)
    assert [ramp(t, rng) for t in range(4)] == [(0.0,), (0.5,), (1.0,), (0.0,)]
    exc = make_stream({"kind": "constant", "value": [1.0], "excursions": [{"interval": [1, 2], "value": [5.0]}]}, 1)
    assert [exc(t, rng) for t in range(4)] == [(1.0,), (5.0,), (5.0,), (1.0,)]
    script = make_stream({"kind": "script", "values": [[1.0], [2.0]]}, 1)
    assert script(3, rng) == (2.0,)


def test_schema_errors_carry_pointer():
    bad = copy.deepcopy(BASE)
    bad["horizon_ticks"] = -1
    with pytest.raises(SchemaError) as info:
        scenario_from_dict(bad)
    assert info.value.pointer == "/horizon_ticks"
    missing = copy.deepcopy(BASE)
    del missing["schema_version"]
    with pytest.raises(SchemaError):
        scenario_from_dict(missing)


def test_run_is_deterministic_and_seed_sensitive():
    s = scenario(monte_carlo={"trials": 3})
    a, _ = run_scenario(s)
    b, _ = run_scenario(s)
    c, _ = run_scenario(s, seed=12)
    assert a.to_json() == b.to_json()
    assert a.to_json() != c.to_json()
    assert a.trial_seeds == [trial_seed(11, i) for i in range(3)]


def test_env_seed_override(monkeypatch):
    s = scenario()
    monkeypatch.setenv(SEED_ENV, "77")
    assert effective_seed(s) == 77
    assert run_scenario(s)[0].seed == 77
    assert effective_seed(s, 5) == 5
    monkeypatch.setenv(SEED_ENV, "abc")
    with pytest.raises(ValueError):
        effective_seed(s)


def test_parallel_trials_match_serial():
    s = scenario(monte_carlo={"trials": 6})
    assert run_scenario(s, jobs=2)[0].to_json() == run_scenario(s)[0].to_json()


def test_report_fields_and_threshold():
    report, trace = run_scenario(scenario(hazard_threshold=0))
    d = report.to_dict()
    assert d["schema_version"] == 1 and d["pattern"] == "single_channel"
    assert d["hazard_count"] + d["loss_ticks"] + d["ok_ticks"] == d["total_ticks"] == 60
    assert report.exceeds_threshold == (d["hazard_count"] > 0)
    assert trace.events


def test_compare_patterns_identical_conditions():
    s = scenario_from_dict(bundled("single_channel"))
    rows = compare_patterns(s, ["single_channel", "rta", "tmr", "nonsense"])
    by_kind = {r["kind"]: r for r in rows}
    assert by_kind["single_channel"]["hazard_count"] == run_scenario(s)[0].hazard_count
    assert by_kind["rta"]["hazard_count"] <= by_kind["single_channel"]["hazard_count"]
    assert "error" in by_kind["nonsense"]


def test_compare_on_detection_scenario_uses_the_detector():
    s = scenario_from_dict(bundled("function_modification"))
    rows = {r["kind"]: r for r in compare_patterns(s, ["function_modification", "single_channel"])}
    assert rows["function_modification"]["hazard_count"] == 0
    assert rows["single_channel"]["hazard_count"] > 0


def test_compare_reports_faults_on_missing_components():
    s = scenario_from_dict(bundled("rta_ensemble"))
    rows = {r["kind"]: r for r in compare_patterns(s, ["rta", "single_channel"])}
    assert "hazard_count" in rows["rta"]
    assert "model1" in rows["single_channel"]["error"]


@pytest.mark.parametrize("name", ["backup_parallel", "rta", "value_override", "function_modification",
                                  "combined_output_monitor", "active_monitor"])
def test_bundled_scenarios_beat_single_channel_on_hazards(name):
    data = bundled(name)
    s = scenario_from_dict(data)
    pattern = run_scenario(s)[0]
    single = run_scenario(s, config={"kind": "single_channel"})[0]
    assert pattern.hazard_count <= single.hazard_count


def test_report_helpers():
    rows = [{"a": 1, "b": 0.123456}, {"a": 22, "b": None}]
    text = table(rows, ["a", "b"])
    assert "a" in text.splitlines()[0] and "22" in text
    lines = json_lines(rows).strip().splitlines()
    assert [json.loads(line) for line in lines] == rows
