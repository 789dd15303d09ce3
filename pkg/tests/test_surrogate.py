import random

import pytest

from aegispat.core import Signal
from aegispat.surrogate import (
    BackupProfile,
    DetectorSurrogate,
    DimensionMismatch,
    ErrorModel,
    Identity,
    LinearMap,
    LookupGrid,
    OddRegion,
    PiecewisePolynomial,
    SurrogateProfile,
    eval_backup,
    eval_complex,
    in_odd,
    reference_from_dict,
)
from aegispat.geometry import Box2D, iou

REF = LinearMap(((2.0,),), (0.5,))


def profile(**inside):
    return SurrogateProfile(1, REF, ((OddRegion(((0.0, 1.0),)), ErrorModel(**inside)),), ErrorModel(p_erroneous=1.0))


def test_reference_functions():
    assert REF((1.0,)) == 2.5
    assert LinearMap(((1.0, 0.0), (0.0, 1.0)), (0.0, 1.0))((2.0, 3.0)) == (2.0, 4.0)
    poly = PiecewisePolynomial((0.0,), ((1.0,), (0.0, 1.0, 1.0)))
    assert poly((-1.0,)) == 1.0 and poly((2.0,)) == 6.0
    grid = LookupGrid(((0.0, 1.0),), [0.0, 10.0])
    assert grid((0.25,)) == 2.5 and grid((5.0,)) == 10.0
    assert Identity()((3.0,)) == 3.0


def test_reference_from_dict_linear():
    ref = reference_from_dict({"kind": "linear", "weights": [[1.0, 1.0]], "bias": [0.0]}, 2)
    assert ref((1.0, 2.0)) == 3.0


def test_linear_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        LinearMap(((1.0,),), (0.0, 1.0))


def test_odd_membership():
    regions = [OddRegion(((0.0, 1.0), (0.0, 1.0))), OddRegion(((2.0, 3.0), (0.0, 1.0)))]
    assert in_odd(regions, (0.5, 0.5)) and in_odd(regions, (2.5, 1.0))
    assert not in_odd(regions, (1.5, 0.5))
    with pytest.raises(DimensionMismatch):
        in_odd(regions, (0.5,))
    with pytest.raises(ValueError):
        OddRegion(((1.0, 0.0),))


def test_in_domain_noise_free_output_is_the_reference():
    rng = random.Random(0)
    for x in (0.0, 0.3, 1.0):
        sig, u = eval_complex(profile(), (x,), rng)
        assert sig.value == REF((x,)) and sig.valid and not sig.tags and u == 0.0


def test_out_of_domain_outputs_are_erroneous_but_valid():
    sig, _ = eval_complex(profile(), (1.5,), random.Random(0))
    assert "erroneous" in sig.tags and sig.valid
    assert abs(sig.value - REF((1.5,))) == pytest.approx(10.0)


def test_selftest_flags_some_errors():
    rng = random.Random(1)
    flags = [eval_complex(profile(), (2.0,), rng, p_selftest=0.5)[0].valid for _ in range(2000)]
    assert 0.4 < flags.count(False) / 2000 < 0.6


def test_error_rate_matches_probability():
    rng = random.Random(2)
    errs = sum("erroneous" in eval_complex(profile(p_erroneous=0.1), (0.5,), rng)[0].tags for _ in range(20000))
    assert 0.09 < errs / 20000 < 0.11


def test_uncertainty_when_erroneous():
    p = profile(p_erroneous=1.0, uncertainty=0.1, uncertainty_when_erroneous=0.9)
    assert eval_complex(p, (0.5,), random.Random(0))[1] == 0.9


def test_invalid_error_model():
    with pytest.raises(ValueError):
        ErrorModel(p_erroneous=1.5)
    with pytest.raises(ValueError):
        ErrorModel(noise_std=-1)


def test_profile_from_dict_round_trip():
    p = SurrogateProfile.from_dict({
        "input_dim": 1,
        "reference": {"kind": "linear", "weights": [[2.0]], "bias": [0.5]},
        "regions": [{"bounds": [[0, 1]], "error": {"noise_std": 0.1}}],
        "ood": {"p_erroneous": 0.5},
    })
    assert p.odd[0].bounds == ((0.0, 1.0),)
    assert p.error_model((2.0,)).p_erroneous == 0.5


def test_backup_modes():
    assert eval_backup(BackupProfile(), REF, (0.3,)).value == pytest.approx(1.1)
    degraded = eval_backup(BackupProfile("degraded", 0.25), REF, (0.3,)).value
    assert abs(degraded - 1.1) <= 0.25 and (degraded / 0.5).is_integer()


def test_detector_respects_iou_floor():
    det = DetectorSurrogate(id="complex", iou_floor=0.7, jitter=0.3)
    rng = random.Random(3)
    truth = (0.0, 0.0, 4.0, 2.0)
    for t in range(200):
        out, _ = det.step({"x": Signal(truth, True, t)}, None, t, rng)
        box = Box2D(*out["y"].value[:4])
        assert iou(box, Box2D(*truth)) >= 0.7
