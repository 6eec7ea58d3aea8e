import json

import pytest

from conftest import make_rep
from wrlab.errors import NoValidReps
from wrlab.feedback import FormThresholds, evaluate_set


def good_set(n=5):
    return [
        make_rep(start_t=3 * i, bottom_t=3 * i + 1.2, end_t=3 * i + 2.5,
                 knee=120.0, hip=95.0, obliquity=1.0, knee_diff=1.5, hip_diff=1.0)
        for i in range(n)
    ]


def test_good_set_is_all_green():
    fb = evaluate_set(good_set(), set_index=3)
    assert fb.verdicts == {"depth": "green", "posture": "green", "symmetry": "green"}
    assert fb.set_index == 3
    assert len(fb.per_rep_detail) == 5


def test_shallow_set_flips_depth_only():
    reps = [
        make_rep(start_t=3 * i, bottom_t=3 * i + 1, end_t=3 * i + 2, knee=90.0,
                 hip=95.0, obliquity=1.0, knee_diff=1.0, hip_diff=1.0)
        for i in range(5)
    ]
    fb = evaluate_set(reps)
    assert fb.verdicts["depth"] == "red"
    assert fb.verdicts["posture"] == "green"
    assert fb.verdicts["symmetry"] == "green"


def test_tilted_set_flips_symmetry():
    reps = [
        make_rep(start_t=3 * i, bottom_t=3 * i + 1, end_t=3 * i + 2, knee=120.0,
                 hip=95.0, obliquity=8.0, knee_diff=1.0, hip_diff=1.0)
        for i in range(5)
    ]
    fb = evaluate_set(reps)
    assert fb.verdicts["symmetry"] == "red"
    assert fb.verdicts["depth"] == "green"


def test_leaning_set_flips_posture():
    reps = [
        make_rep(start_t=3 * i, bottom_t=3 * i + 1, end_t=3 * i + 2, knee=120.0,
                 hip=150.0, obliquity=1.0, knee_diff=1.0, hip_diff=1.0)
        for i in range(5)
    ]
    assert evaluate_set(reps).verdicts["posture"] == "red"


def test_median_resists_single_bad_rep():
    reps = good_set()
    reps[2] = make_rep(start_t=6, bottom_t=7, end_t=8, knee=40.0, obliquity=20.0)
    fb = evaluate_set(reps)
    assert fb.verdicts == {"depth": "green", "posture": "green", "symmetry": "green"}


def test_invalid_reps_ignored_and_no_valid_reps_raises():
    reps = good_set()
    for i, rep in enumerate(reps):
        reps[i] = make_rep(start_t=rep.start_t, bottom_t=rep.bottom_t,
                           end_t=rep.end_t, valid=False)
    with pytest.raises(NoValidReps):
        evaluate_set(reps)


def test_order_invariance():
    reps = [
        make_rep(start_t=3 * i, bottom_t=3 * i + 1, end_t=3 * i + 2,
                 knee=100.0 + 8 * i, obliquity=float(i))
        for i in range(5)
    ]
    forward = evaluate_set(reps)
    backward = evaluate_set(list(reversed(reps)))
    assert forward.verdicts == backward.verdicts


def test_verdicts_monotone_in_each_metric(rng):
    th = FormThresholds()
    order = {"green": 1, "red": 0}
    for _ in range(100):
        knee = float(rng.uniform(80, 140))
        hip = float(rng.uniform(90, 160))
        asym = float(rng.uniform(0, 12))
        reps = [
            make_rep(start_t=3 * i, bottom_t=3 * i + 1, end_t=3 * i + 2,
                     knee=knee, hip=hip, obliquity=asym, knee_diff=asym,
                     hip_diff=asym)
            for i in range(5)
        ]
        base = evaluate_set(reps, th)
        better = [
            make_rep(start_t=3 * i, bottom_t=3 * i + 1, end_t=3 * i + 2,
                     knee=knee + 5, hip=hip - 5, obliquity=max(0.0, asym - 2),
                     knee_diff=max(0.0, asym - 2), hip_diff=max(0.0, asym - 2))
            for i in range(5)
        ]
        improved = evaluate_set(better, th)
        for key in ("depth", "posture", "symmetry"):
            assert order[improved.verdicts[key]] >= order[base.verdicts[key]]


def test_event_line_is_canonical_json():
    fb = evaluate_set(good_set(), set_index=7)
    line = fb.to_event_line()
    assert json.loads(line) == {
        "set_index": 7, "depth": "green", "posture": "green", "symmetry": "green",
    }
    assert line == json.dumps(json.loads(line), sort_keys=True,
                              separators=(",", ":"))


def test_thresholds_validation_and_manifest_bridge():
    from wrlab.protocol import Thresholds

    with pytest.raises(ValueError):
        FormThresholds(depth_min_flexion=0.0)
    th = FormThresholds.from_manifest(Thresholds(depth_min_flexion=100.0))
    assert th.depth_min_flexion == 100.0
    assert th.symmetry_max == 5.0
