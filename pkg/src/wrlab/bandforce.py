"""Band force evaluation from calibration and marker geometry.

The instrumented segment is the straight line between the two markers
sewn on each band. Force magnitude follows the length-normalized
stiffness law

    F = k_cal * (l_cal / l0) * (length - l0) + f_i

clamped below at zero because a slack band transmits no compressive
force. The l_cal/l0 factor makes the law depend only on relative stretch,
so the same calibration serves any instrumented segment length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import median

from .calibration import BandCalibration
from .errors import (
    DegenerateGeometry,
    InsufficientFrames,
    MissingMarker,
    NonPositiveRestLength,
)
from .kinematics import MarkerFrame

# Table-style marker ids for the band-sewn markers: (near knee, near wrist)
BAND_MARKERS = {"left": (18, 20), "right": (17, 19)}


@dataclass(frozen=True, slots=True)
class BandGeometry:
    """Which markers instrument a band side, and its rest segment length."""

    side: str
    l0_cm: float
    knee_marker_id: int
    wrist_marker_id: int

    def __post_init__(self):
        if self.side not in BAND_MARKERS:
            raise ValueError(f"side must be left or right, got {self.side!r}")
        if not self.l0_cm > 0:
            raise NonPositiveRestLength(f"l0_cm must be positive, got {self.l0_cm}")
        expected = BAND_MARKERS[self.side]
        if (self.knee_marker_id, self.wrist_marker_id) != expected:
            raise ValueError(
                f"{self.side} band uses markers {expected} (knee, wrist), "
                f"got ({self.knee_marker_id}, {self.wrist_marker_id})"
            )

    @classmethod
    def for_side(cls, side: str, l0_cm: float) -> "BandGeometry":
        knee_id, wrist_id = BAND_MARKERS[side]
        return cls(side=side, l0_cm=l0_cm, knee_marker_id=knee_id, wrist_marker_id=wrist_id)


@dataclass(frozen=True, slots=True)
class BandForceSample:
    """One force estimate: magnitude, unit pull direction, stretch state."""

    t: float
    side: str
    length_cm: float
    delta_l_cm: float
    force_n: float
    direction: tuple[float, float, float]
    extrapolated: bool

    def __post_init__(self):
        if self.force_n < 0:
            raise ValueError("force_n must be non-negative")
        if self.force_n > 0:
            norm = math.sqrt(sum(c * c for c in self.direction))
            if abs(norm - 1.0) > 1e-9:
                raise ValueError(f"direction must be unit length, norm={norm}")


def band_force(
    cal: BandCalibration, l0_cm: float, length_cm: float
) -> tuple[float, bool]:
    """Force magnitude (N) and extrapolation flag for a segment length.

    The extrapolation flag fires when the equivalent gauge-rig
    displacement (l_cal/l0)*(length-l0) falls outside the displacement
    range the calibration was fitted on.
    """
    if l0_cm <= 0:
        raise NonPositiveRestLength(f"l0_cm must be positive, got {l0_cm}")
    equivalent_d = cal.l_cal_cm / l0_cm * (length_cm - l0_cm)
    force = cal.k_cal * equivalent_d + cal.f_i
    extrapolated = not (cal.d_min_cm <= equivalent_d <= cal.d_max_cm)
    return max(0.0, force), extrapolated


def band_force_vector(
    frame: MarkerFrame, geom: BandGeometry, cal: BandCalibration
) -> BandForceSample:
    """Force sample from one frame's band marker pair.

    Marker positions are meters; the stiffness law runs in cm. The pull
    direction points from the wrist-side marker toward the knee-side
    marker, i.e. down the band path toward the frame.
    """
    for marker_id in (geom.knee_marker_id, geom.wrist_marker_id):
        if not frame.is_valid(marker_id):
            raise MissingMarker(
                f"band marker {marker_id} invalid in frame seq={frame.seq}"
            )
    knee_p = frame.position(geom.knee_marker_id)
    wrist_p = frame.position(geom.wrist_marker_id)
    diff = (knee_p[0] - wrist_p[0], knee_p[1] - wrist_p[1], knee_p[2] - wrist_p[2])
    dist_m = math.sqrt(diff[0] ** 2 + diff[1] ** 2 + diff[2] ** 2)
    length_cm = dist_m * 100.0
    force, extrapolated = band_force(cal, geom.l0_cm, length_cm)
    if dist_m <= 1e-12:
        if force > 0:
            raise DegenerateGeometry(
                f"band markers coincide in frame seq={frame.seq}"
            )
        direction = (0.0, 0.0, 0.0)
    else:
        direction = (diff[0] / dist_m, diff[1] / dist_m, diff[2] / dist_m)
    return BandForceSample(
        t=frame.t,
        side=geom.side,
        length_cm=length_cm,
        delta_l_cm=length_cm - geom.l0_cm,
        force_n=force,
        direction=direction,
        extrapolated=extrapolated,
    )


def estimate_rest_length(
    frames: list[MarkerFrame],
    geom_side: str | BandGeometry,
    window_s: float | None = None,
    min_frames: int = 10,
) -> float:
    """Median band-marker separation (cm) over a slack-band pose.

    Frames should come from a designated pose with the band unloaded. The
    median keeps single-frame marker glitches from biasing the estimate.
    ``window_s`` restricts to frames within that many seconds of the first
    frame.
    """
    side = geom_side.side if isinstance(geom_side, BandGeometry) else geom_side
    knee_id, wrist_id = BAND_MARKERS[side]
    if window_s is not None and frames:
        t0 = frames[0].t
        frames = [f for f in frames if f.t - t0 <= window_s]
    distances = []
    for f in frames:
        if not (f.is_valid(knee_id) and f.is_valid(wrist_id)):
            continue
        a = f.position(knee_id)
        b = f.position(wrist_id)
        distances.append(
            math.dist(a, b) * 100.0
        )
    if len(distances) < min_frames:
        raise InsufficientFrames(
            f"need at least {min_frames} valid slack-pose frames, got {len(distances)}"
        )
    return float(median(distances))


__all__ = [
    "BAND_MARKERS",
    "BandGeometry",
    "BandForceSample",
    "band_force",
    "band_force_vector",
    "estimate_rest_length",
]
