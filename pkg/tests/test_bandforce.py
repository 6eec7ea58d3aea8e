import math

import numpy as np
import pytest

from conftest import make_frame
from wrlab.bandforce import (
    BandGeometry,
    band_force,
    band_force_vector,
    estimate_rest_length,
)
from wrlab.calibration import BandCalibration
from wrlab.errors import InsufficientFrames, MissingMarker, NonPositiveRestLength


def averaged_cal(d_max=10.0):
    return BandCalibration(
        side="averaged", k_cal=5.47, f_i=3.945, l_cal_cm=30.0,
        r_squared=1.0, sample_count=22, d_min_cm=0.0, d_max_cm=d_max,
    )


def test_zero_stretch_returns_initial_force():
    force, extrapolated = band_force(averaged_cal(), l0_cm=25.0, length_cm=25.0)
    assert force == pytest.approx(3.945, abs=1e-12)
    assert not extrapolated


def test_two_cm_stretch_at_reference_length():
    force, _ = band_force(averaged_cal(), l0_cm=30.0, length_cm=32.0)
    assert force == pytest.approx(5.47 * 2 + 3.945, abs=1e-12)


def test_force_depends_only_on_relative_stretch():
    f1, _ = band_force(averaged_cal(), l0_cm=30.0, length_cm=32.0)
    f2, _ = band_force(averaged_cal(), l0_cm=15.0, length_cm=16.0)
    assert f1 == f2 == pytest.approx(14.885, abs=1e-12)


def test_slack_band_clamps_to_zero():
    force, _ = band_force(averaged_cal(), l0_cm=30.0, length_cm=20.0)
    assert force == 0.0
    # mild slack that does not cross zero stays positive
    force, _ = band_force(averaged_cal(), l0_cm=30.0, length_cm=29.9)
    assert force == pytest.approx(3.945 - 5.47 * 0.1, abs=1e-9)


def test_nonpositive_rest_length_rejected():
    with pytest.raises(NonPositiveRestLength):
        band_force(averaged_cal(), l0_cm=0.0, length_cm=10.0)


def test_scale_invariance_exact_for_dyadic_scales(rng):
    # powers of two scale the floats exactly, making the identity bit-exact
    cal = averaged_cal()
    for _ in range(500):
        l0 = float(rng.uniform(5.0, 60.0))
        length = float(rng.uniform(0.5, 2.2)) * l0
        s = 2.0 ** int(rng.integers(-4, 7))
        f1, e1 = band_force(cal, l0, length)
        f2, e2 = band_force(cal, s * l0, s * length)
        assert f1 == f2 and e1 == e2


def test_scale_invariance_for_arbitrary_scales(rng):
    cal = averaged_cal()
    for _ in range(300):
        l0 = float(rng.uniform(5.0, 60.0))
        length = float(rng.uniform(0.5, 2.2)) * l0
        s = float(rng.uniform(0.1, 9.0))
        f1, _ = band_force(cal, l0, length)
        f2, _ = band_force(cal, s * l0, s * length)
        assert f2 == pytest.approx(f1, rel=1e-12, abs=1e-12)


def test_joint_rescale_of_stiffness_and_reference_length(rng):
    for _ in range(200):
        c = float(rng.uniform(0.2, 5.0))
        base = averaged_cal()
        scaled = BandCalibration(
            side="averaged", k_cal=base.k_cal * c, f_i=base.f_i,
            l_cal_cm=base.l_cal_cm / c, r_squared=1.0, sample_count=22,
            d_min_cm=0.0, d_max_cm=base.d_max_cm,
        )
        l0 = float(rng.uniform(10.0, 40.0))
        length = float(rng.uniform(0.8, 1.6)) * l0
        f1, _ = band_force(base, l0, length)
        f2, _ = band_force(scaled, l0, length)
        assert abs(f1 - f2) <= 1e-9


def test_force_monotone_in_length(rng):
    cal = averaged_cal()
    l0 = 25.0
    lengths = np.sort(rng.uniform(10.0, 50.0, 200))
    forces = [band_force(cal, l0, float(x))[0] for x in lengths]
    assert all(b >= a for a, b in zip(forces, forces[1:]))


def test_extrapolation_flag_outside_calibrated_range():
    cal = averaged_cal(d_max=10.0)
    # equivalent displacement (l_cal/l0)*dl = 1.2*dl for l0=25
    _, flag = band_force(cal, 25.0, 25.0 + 8.0)   # 9.6 cm equivalent
    assert not flag
    _, flag = band_force(cal, 25.0, 25.0 + 9.0)   # 10.8 cm equivalent
    assert flag
    _, flag = band_force(cal, 25.0, 24.0)         # negative equivalent
    assert flag


def band_frame(wrist_pos, knee_pos, side="left", invalid=()):
    knee_id, wrist_id = (18, 20) if side == "left" else (17, 19)
    return make_frame({wrist_id: wrist_pos, knee_id: knee_pos}, invalid=invalid)


def test_vector_direction_points_down_the_band():
    geom = BandGeometry.for_side("left", l0_cm=25.0)
    frame = band_frame((0.0, 0.0, 1.8), (0.0, 0.0, 1.0))
    sample = band_force_vector(frame, geom, averaged_cal(d_max=100.0))
    assert sample.direction == pytest.approx((0.0, 0.0, -1.0))
    assert sample.length_cm == pytest.approx(80.0)


def test_vector_at_rest_length_gives_initial_force():
    geom = BandGeometry.for_side("left", l0_cm=25.0)
    frame = band_frame((0.0, 0.0, 1.0), (0.0, 0.25, 1.0))
    sample = band_force_vector(frame, geom, averaged_cal())
    assert sample.force_n == pytest.approx(3.945, abs=1e-9)
    assert not sample.extrapolated
    assert math.dist(sample.direction, (0, 0, 0)) == pytest.approx(1.0, abs=1e-9)


def test_vector_missing_marker():
    geom = BandGeometry.for_side("left", l0_cm=25.0)
    frame = band_frame((0.0, 0.0, 1.8), (0.0, 0.0, 1.0), invalid=(18,))
    with pytest.raises(MissingMarker):
        band_force_vector(frame, geom, averaged_cal())


def test_geometry_marker_assignment_enforced():
    geom = BandGeometry.for_side("right", l0_cm=25.0)
    assert (geom.knee_marker_id, geom.wrist_marker_id) == (17, 19)
    with pytest.raises(ValueError):
        BandGeometry(side="right", l0_cm=25.0, knee_marker_id=18, wrist_marker_id=20)


def slack_frames(distances_m):
    frames = []
    for i, d in enumerate(distances_m):
        frames.append(
            make_frame({20: (0.0, 0.0, 1.0), 18: (0.0, d, 1.0)}, t=i / 100.0, seq=i)
        )
    return frames


def test_rest_length_constant_distance():
    frames = slack_frames([0.25] * 100)
    assert estimate_rest_length(frames, "left") == pytest.approx(25.0, abs=1e-12)


def test_rest_length_median_shrugs_off_outliers():
    distances = [0.249, 0.250, 0.251, 0.250, 0.600] * 20
    est = estimate_rest_length(slack_frames(distances), "left")
    assert est == pytest.approx(25.0, abs=0.05)
    mean_cm = float(np.mean(distances)) * 100.0
    assert abs(mean_cm - 25.0) > 5.0  # the mean would have been badly biased


def test_rest_length_needs_enough_frames():
    with pytest.raises(InsufficientFrames):
        estimate_rest_length(slack_frames([0.25] * 5), "left")


def test_rest_length_window_restricts_frames():
    # later frames are stretched; the window keeps only the slack pose
    distances = [0.25] * 50 + [0.40] * 200
    est = estimate_rest_length(slack_frames(distances), "left", window_s=0.49)
    assert est == pytest.approx(25.0, abs=1e-9)


def test_pipeline_force_table_matches_scalar_api(rng):
    from wrlab.kinematics import FrameBlock
    from wrlab.pipeline import band_force_table

    cal = averaged_cal(d_max=100.0)
    frames = []
    for i in range(50):
        wrist = rng.uniform(-1, 1, 3)
        knee = wrist + rng.uniform(0.05, 0.6) * np.array([0.0, 0.0, -1.0])
        frames.append(make_frame({20: tuple(wrist), 18: tuple(knee)}, t=i * 0.01, seq=i))
    block = FrameBlock.from_frames(frames)
    table = band_force_table(block, "left", 25.0, cal)
    geom = BandGeometry.for_side("left", l0_cm=25.0)
    for i, frame in enumerate(frames):
        sample = band_force_vector(frame, geom, cal)
        assert table.force_n[i] == sample.force_n
        assert table.length_cm[i] == sample.length_cm
        assert bool(table.extrapolated[i]) == sample.extrapolated
