from fractions import Fraction

import numpy as np
import pytest

from conftest import make_rep
from wrlab.errors import InsufficientReps, NonMonotonicTime
from wrlab.kinematics import BiometricSample, biometrics_block
from wrlab.protocol import (
    PlannedSegment,
    Segment,
    SessionManifest,
    SessionRecord,
    Thresholds,
    block_average,
    find_rep_windows,
    last_block_average,
    protocol_deviations,
    segment_reps,
    training_start_end,
)
from wrlab.simulator import ExerciseSpec, synthesize_block


def samples_from_series(t, knee, obliquity=None):
    obliquity = obliquity if obliquity is not None else np.zeros_like(knee)
    return [
        BiometricSample(
            t=float(ti), knee_flexion_left=float(k), knee_flexion_right=float(k),
            hip_flexion_left=float(k) * 0.75, hip_flexion_right=float(k) * 0.75,
            pelvic_obliquity=float(o), knee_diff=0.0, hip_diff=0.0,
        )
        for ti, k, o in zip(t, knee, obliquity)
    ]


def synthetic_cycles(n_reps, peak=120.0, rate=60.0, cadence=2.0):
    n = int(rate * cadence) * n_reps
    t = np.arange(n) / rate
    u = (np.arange(n) % int(rate * cadence)) / (rate * cadence)
    knee = peak * np.sin(np.pi * u) ** 2
    return t, knee


def test_five_clean_cycles_give_five_reps_at_commanded_depth():
    spec = ExerciseSpec(kind="squat", form="good", reps=5, cadence_s=2.0,
                        capture_rate_hz=120.0)
    block, truth = synthesize_block(spec)
    values, ok = biometrics_block(block)
    assert ok.all()
    samples = samples_from_series(block.t, (values[:, 0] + values[:, 1]) / 2)
    reps = segment_reps(samples)
    assert len(reps) == 5
    for rep in reps:
        assert rep.max_knee_flexion == pytest.approx(120.0, abs=0.5)
        assert rep.start_t < rep.bottom_t < rep.end_t


def test_flat_series_yields_no_reps():
    t = np.arange(100) / 50.0
    assert segment_reps(samples_from_series(t, np.zeros(100))) == []


def test_partial_squat_below_enter_threshold_is_rejected():
    t, knee = synthetic_cycles(3, peak=50.0)
    assert segment_reps(samples_from_series(t, knee)) == []


def test_hysteresis_parameters_validated():
    t, knee = synthetic_cycles(1)
    with pytest.raises(ValueError):
        segment_reps(samples_from_series(t, knee), enter_deg=20.0, exit_deg=60.0)


def test_non_monotonic_time_rejected():
    t, knee = synthetic_cycles(1)
    t = t.copy()
    t[10] = t[9] - 0.5
    with pytest.raises(NonMonotonicTime):
        segment_reps(samples_from_series(t, knee))


def test_rep_intervals_are_disjoint():
    t, knee = synthetic_cycles(8)
    reps = segment_reps(samples_from_series(t, knee))
    assert len(reps) == 8
    for a, b in zip(reps, reps[1:]):
        assert a.end_t <= b.start_t


def test_rep_count_invariant_under_resampling():
    for rate in (240.0, 480.0):
        spec = ExerciseSpec(kind="squat", form="good", reps=6, cadence_s=2.0,
                            capture_rate_hz=rate)
        block, _ = synthesize_block(spec)
        values, _ = biometrics_block(block)
        samples = samples_from_series(block.t, (values[:, 0] + values[:, 1]) / 2)
        assert len(segment_reps(samples)) == 6


def test_gap_inside_rep_invalidates_it():
    t, knee = synthetic_cycles(3)
    samples = samples_from_series(t, knee)
    bottom_t = float(t[np.argmax(knee)])
    reps = segment_reps(samples, gap_times=[bottom_t])
    assert len(reps) == 3
    assert not reps[0].valid and reps[1].valid and reps[2].valid


def test_find_rep_windows_bottom_is_series_maximum():
    t, knee = synthetic_cycles(1)
    (i0, ib, i1), = find_rep_windows(t, knee)
    assert knee[ib] == knee.max()
    assert i0 < ib < i1


def test_block_average_first_ten():
    reps = [make_rep(start_t=i, bottom_t=i + 0.4, end_t=i + 0.9, knee=120.0)
            for i in range(10)]
    assert block_average(reps)["max_knee_flexion"] == pytest.approx(120.0)

    reps = [make_rep(start_t=i, bottom_t=i + 0.4, end_t=i + 0.9, knee=100.0 + 10 * i)
            for i in range(10)]
    assert block_average(reps)["max_knee_flexion"] == pytest.approx(145.0)


def test_block_average_requires_enough_valid_reps():
    reps = [make_rep(start_t=i, bottom_t=i + 0.4, end_t=i + 0.9) for i in range(10)]
    reps[3] = make_rep(start_t=3, bottom_t=3.4, end_t=3.9, valid=False)
    with pytest.raises(InsufficientReps):
        block_average(reps)


def test_block_average_is_chronological_not_sorted():
    # values rise over time; the first block must see the small early ones
    reps = [make_rep(start_t=i, bottom_t=i + 0.4, end_t=i + 0.9, knee=100.0 + i)
            for i in range(20)]
    first = block_average(reps)["max_knee_flexion"]
    last = last_block_average(reps)["max_knee_flexion"]
    assert first == pytest.approx(np.mean([100 + i for i in range(10)]))
    assert last == pytest.approx(np.mean([100 + i for i in range(10, 20)]))
    assert first != last


def session_with_training(values):
    reps = [
        make_rep(start_t=i, bottom_t=i + 0.4, end_t=i + 0.9, obliquity=v)
        for i, v in enumerate(values)
    ]
    sets = [reps[i : i + 5] for i in range(0, len(reps), 5)]
    return SessionRecord(
        subject_id="s", group="none",
        segments=[Segment("training", sets)], capture_rate_hz=480.0,
    )


def test_training_delta_zero_for_constant_performance():
    session = session_with_training([6.0] * 75)
    delta = training_start_end(session)
    assert all(v == pytest.approx(0.0, abs=1e-12) for v in delta.delta.values())


def test_training_delta_matches_closed_form_for_linear_ramp():
    # ramp 6 -> 1 degrees across 75 reps; expected delta from the exact
    # closed form: mean(last 10) - mean(first 10) of the ramp
    values = [6.0 - 5.0 * i / 74.0 for i in range(75)]
    exact = [Fraction(6) - Fraction(5) * Fraction(i, 74) for i in range(75)]
    expected = float(sum(exact[-10:]) / 10 - sum(exact[:10]) / 10)
    assert expected == pytest.approx(-4.391891891891892)
    session = session_with_training(values)
    delta = training_start_end(session)
    assert delta.delta["peak_abs_obliquity"] == pytest.approx(expected, abs=1e-9)


def test_training_delta_missing_segment_errors():
    session = SessionRecord(subject_id="s", group="none", segments=[],
                            capture_rate_hz=480.0)
    with pytest.raises(InsufficientReps):
        training_start_end(session)


def test_invalid_reps_excluded_from_blocks():
    values = list(range(75))
    session = session_with_training([float(v) for v in values])
    # invalidate the first five reps: the start block shifts to reps 5..14
    for s in session.segments[0].sets[:1]:
        for i in range(5):
            s[i] = make_rep(start_t=i, bottom_t=i + 0.4, end_t=i + 0.9,
                            obliquity=float(i), valid=False)
    delta = training_start_end(session)
    assert delta.start["peak_abs_obliquity"] == pytest.approx(np.mean(values[5:15]))


def test_protocol_deviations_flag_counts():
    session = session_with_training([6.0] * 75)
    notes = protocol_deviations(session)
    assert any("missing segment baseline" in n for n in notes)
    # training counts are as planned, so no training note
    assert not any(n.startswith("training:") for n in notes)


def test_manifest_round_trip_and_unknown_keys():
    manifest = SessionManifest(subject_id="s7", group="visual",
                               capture_rate_hz=240.0, l0_left_cm=25.0,
                               l0_right_cm=25.5)
    back = SessionManifest.from_dict(manifest.to_dict())
    assert back.subject_id == "s7" and back.group == "visual"
    assert back.l0_right_cm == 25.5
    assert back.thresholds.enter_deg == 60.0
    with pytest.raises(ValueError):
        SessionManifest.from_dict({"subject_id": "x", "group": "none", "bogus": 1})
    with pytest.raises(ValueError):
        Thresholds.from_dict({"nope": 3})
    with pytest.raises(ValueError):
        SessionManifest(subject_id="s", group="treadmill")


def test_manifest_default_segments_follow_the_study_plan():
    manifest = SessionManifest(subject_id="s", group="none")
    plan = [(s.label, s.planned_sets, s.planned_reps) for s in manifest.segments]
    assert plan == [("baseline", 1, 10), ("training", 15, 5),
                    ("post", 1, 10), ("retention", 1, 10)]
    assert manifest.planned_total_sets() == 18
    assert manifest.segment_of_set(1) == ("baseline", 1)
    assert manifest.segment_of_set(2) == ("training", 1)
    assert manifest.segment_of_set(16) == ("training", 15)
    assert manifest.segment_of_set(17) == ("post", 1)
    assert manifest.segment_of_set(18) == ("retention", 1)


def test_thresholds_partial_override():
    th = Thresholds.from_dict({"enter_deg": 55.0})
    assert th.enter_deg == 55.0 and th.exit_deg == 20.0
    manifest = SessionManifest(subject_id="s", group="none",
                               thresholds=Thresholds(enter_deg=55.0))
    assert PlannedSegment("baseline", 1, 10) is not None
    assert manifest.thresholds.enter_deg == 55.0
