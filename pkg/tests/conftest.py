import numpy as np
import pytest

from wrlab.kinematics import MarkerFrame
from wrlab.protocol import Rep


def make_frame(positions, t=0.0, seq=0, invalid=()):
    """MarkerFrame from {marker_id: (x, y, z)}; ids in `invalid` flagged out."""
    valid = {mid: mid not in invalid for mid in positions}
    return MarkerFrame(t=t, seq=seq, positions=dict(positions), valid=valid)


def standing_pose(hip_height=0.94, hip_half=0.17, knee_height=0.51,
                  ankle_height=0.08, chest_height=1.32):
    """Hand-built straight-leg pose for the seven biometric markers."""
    return {
        1: (-hip_half, 0.0, ankle_height),
        2: (hip_half, 0.0, ankle_height),
        3: (-hip_half, 0.0, knee_height),
        4: (hip_half, 0.0, knee_height),
        5: (-hip_half, 0.0, hip_height),
        6: (hip_half, 0.0, hip_height),
        16: (0.0, 0.0, chest_height),
    }


def make_rep(start_t=0.0, bottom_t=1.0, end_t=2.0, knee=120.0, hip=90.0,
             obliquity=1.0, knee_diff=1.0, hip_diff=1.0, valid=True):
    return Rep(
        start_t=start_t,
        bottom_t=bottom_t,
        end_t=end_t,
        max_knee_flexion=knee,
        max_hip_flexion=hip,
        peak_abs_obliquity=obliquity,
        peak_abs_knee_diff=knee_diff,
        peak_abs_hip_diff=hip_diff,
        valid=valid,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
