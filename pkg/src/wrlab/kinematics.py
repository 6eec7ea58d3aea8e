"""Squat biometrics from the 20-marker capture schema.

Angles use the flexion convention: 0 degrees standing (straight segment
chain), growing as the joint bends, so a deep squat reads around 90-120.
Pelvic obliquity is the signed angle of the hip-to-hip line against the
horizontal plane, positive when the left hip is higher.

Marker ids follow the capture schema (right | left):
1|2 ankle, 3|4 knee, 5|6 hip, 7|8 side at rib 8, 9|10 shoulder,
11|12 elbow, 13|14 wrist, 15 C4, 16 sternum, 17|18 band near knee,
19|20 band near wrist.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometry, MissingMarker, UnsortedInput

N_MARKERS = 20

RIGHT_ANKLE, LEFT_ANKLE = 1, 2
RIGHT_KNEE, LEFT_KNEE = 3, 4
RIGHT_HIP, LEFT_HIP = 5, 6
RIGHT_SIDE, LEFT_SIDE = 7, 8
RIGHT_SHOULDER, LEFT_SHOULDER = 9, 10
RIGHT_ELBOW, LEFT_ELBOW = 11, 12
RIGHT_WRIST, LEFT_WRIST = 13, 14
C4, STERNUM = 15, 16
RIGHT_BAND_KNEE, LEFT_BAND_KNEE = 17, 18
RIGHT_BAND_WRIST, LEFT_BAND_WRIST = 19, 20

# chest marker used in the hip angle; the sternum tracks torso lean better
# than the C4 marker, but it is a configurable choice
DEFAULT_CHEST_MARKER = STERNUM

_LEG = {"left": (LEFT_ANKLE, LEFT_KNEE, LEFT_HIP), "right": (RIGHT_ANKLE, RIGHT_KNEE, RIGHT_HIP)}


@dataclass(frozen=True, slots=True)
class MarkerFrame:
    """One capture frame: positions in meters keyed by marker id."""

    t: float
    seq: int
    positions: dict[int, tuple[float, float, float]]
    valid: dict[int, bool] = field(default_factory=dict)

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("t must be non-negative")
        for mid in self.positions:
            if not 1 <= mid <= N_MARKERS:
                raise ValueError(f"marker id {mid} outside [1, {N_MARKERS}]")

    def is_valid(self, marker_id: int) -> bool:
        if marker_id not in self.positions:
            return False
        if not self.valid.get(marker_id, True):
            return False
        return all(math.isfinite(c) for c in self.positions[marker_id])

    def position(self, marker_id: int) -> tuple[float, float, float]:
        if not self.is_valid(marker_id):
            raise MissingMarker(f"marker {marker_id} invalid in frame seq={self.seq}")
        return self.positions[marker_id]


@dataclass(frozen=True, slots=True)
class BiometricSample:
    """Per-frame squat biometrics, all in degrees."""

    t: float
    knee_flexion_left: float
    knee_flexion_right: float
    hip_flexion_left: float
    hip_flexion_right: float
    pelvic_obliquity: float
    knee_diff: float
    hip_diff: float

    def __post_init__(self):
        for name in ("knee_flexion_left", "knee_flexion_right",
                     "hip_flexion_left", "hip_flexion_right"):
            v = getattr(self, name)
            if not -1e-9 <= v <= 180.0 + 1e-9:
                raise ValueError(f"{name}={v} outside [0, 180]")
        if abs(self.pelvic_obliquity) > 90.0 + 1e-9:
            raise ValueError("pelvic_obliquity outside [-90, 90]")
        for name in ("knee_diff", "hip_diff"):
            if abs(getattr(self, name)) > 180.0 + 1e-9:
                raise ValueError(f"{name} outside [-180, 180]")

    @property
    def mean_knee_flexion(self) -> float:
        return 0.5 * (self.knee_flexion_left + self.knee_flexion_right)

    @property
    def mean_hip_flexion(self) -> float:
        return 0.5 * (self.hip_flexion_left + self.hip_flexion_right)


def interior_angle(a, b, c) -> float | np.ndarray:
    """Angle at vertex b between rays b->a and b->c, degrees in [0, 180].

    Uses atan2(|u x v|, u.v), stable near 0 and 180. Accepts single
    points or (..., 3) arrays (broadcast over leading axes).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    u = a - b
    v = c - b
    nu = np.linalg.norm(u, axis=-1)
    nv = np.linalg.norm(v, axis=-1)
    if np.any(nu == 0.0) or np.any(nv == 0.0):
        raise DegenerateGeometry("coincident points leave the angle undefined")
    cross = np.linalg.norm(np.cross(u, v), axis=-1)
    dot = np.sum(u * v, axis=-1)
    ang = np.degrees(np.arctan2(cross, dot))
    return float(ang) if ang.ndim == 0 else ang


def knee_flexion(frame: MarkerFrame, side: str) -> float:
    """Knee bend from straight, via the ankle-knee-hip markers."""
    ankle_id, knee_id, hip_id = _LEG[side]
    return 180.0 - interior_angle(
        frame.position(ankle_id), frame.position(knee_id), frame.position(hip_id)
    )


def hip_flexion(
    frame: MarkerFrame, side: str, chest_marker: int = DEFAULT_CHEST_MARKER
) -> float:
    """Hip bend from straight, via the chest-hip-knee markers."""
    _, knee_id, hip_id = _LEG[side]
    return 180.0 - interior_angle(
        frame.position(chest_marker), frame.position(hip_id), frame.position(knee_id)
    )


def pelvic_obliquity(frame: MarkerFrame, up_axis: int = 2) -> float:
    """Signed hip-line tilt against the horizontal plane, degrees.

    Positive when the left hip marker sits higher along ``up_axis``.
    """
    left = np.asarray(frame.position(LEFT_HIP), dtype=float)
    right = np.asarray(frame.position(RIGHT_HIP), dtype=float)
    span = float(np.linalg.norm(left - right))
    if span == 0.0:
        raise DegenerateGeometry("hip markers coincide")
    return math.degrees(math.asin((left[up_axis] - right[up_axis]) / span))


def biometrics(
    frame: MarkerFrame,
    chest_marker: int = DEFAULT_CHEST_MARKER,
    up_axis: int = 2,
) -> BiometricSample:
    """All per-frame biometrics; raises MissingMarker on occluded input."""
    kl = knee_flexion(frame, "left")
    kr = knee_flexion(frame, "right")
    hl = hip_flexion(frame, "left", chest_marker)
    hr = hip_flexion(frame, "right", chest_marker)
    ob = pelvic_obliquity(frame, up_axis)
    return BiometricSample(
        t=frame.t,
        knee_flexion_left=kl,
        knee_flexion_right=kr,
        hip_flexion_left=hl,
        hip_flexion_right=hr,
        pelvic_obliquity=ob,
        knee_diff=kl - kr,
        hip_diff=hl - hr,
    )


# ---------------------------------------------------------------------------
# Batch representation: the pipeline runs on arrays, the per-frame API above
# stays the reference semantics.
# ---------------------------------------------------------------------------

BIOMETRIC_COLUMNS = (
    "knee_flex_l",
    "knee_flex_r",
    "hip_flex_l",
    "hip_flex_r",
    "pelvic_obliquity",
    "knee_diff",
    "hip_diff",
)

_BIOMETRIC_REQUIRED = (
    RIGHT_ANKLE, LEFT_ANKLE, RIGHT_KNEE, LEFT_KNEE,
    RIGHT_HIP, LEFT_HIP, STERNUM,
)


@dataclass(slots=True)
class FrameBlock:
    """Column-oriented frame storage: pos[n, marker_id, xyz], meters.

    Row 0 of the marker axis is unused so ids index directly.
    """

    t: np.ndarray
    seq: np.ndarray
    pos: np.ndarray
    valid: np.ndarray

    def __len__(self) -> int:
        return self.t.shape[0]

    @classmethod
    def empty(cls) -> "FrameBlock":
        return cls(
            t=np.empty(0),
            seq=np.empty(0, dtype=np.int64),
            pos=np.empty((0, N_MARKERS + 1, 3)),
            valid=np.zeros((0, N_MARKERS + 1), dtype=bool),
        )

    @classmethod
    def from_frames(cls, frames: list[MarkerFrame]) -> "FrameBlock":
        n = len(frames)
        block = cls(
            t=np.zeros(n),
            seq=np.zeros(n, dtype=np.int64),
            pos=np.full((n, N_MARKERS + 1, 3), np.nan),
            valid=np.zeros((n, N_MARKERS + 1), dtype=bool),
        )
        for i, f in enumerate(frames):
            block.t[i] = f.t
            block.seq[i] = f.seq
            for mid, p in f.positions.items():
                block.pos[i, mid] = p
                block.valid[i, mid] = f.is_valid(mid)
        return block

    def to_frames(self) -> list[MarkerFrame]:
        out = []
        for i in range(len(self)):
            positions = {}
            valid = {}
            for mid in range(1, N_MARKERS + 1):
                if np.all(np.isfinite(self.pos[i, mid])):
                    positions[mid] = tuple(float(c) for c in self.pos[i, mid])
                    valid[mid] = bool(self.valid[i, mid])
            out.append(
                MarkerFrame(t=float(self.t[i]), seq=int(self.seq[i]),
                            positions=positions, valid=valid)
            )
        return out

    def slice(self, idx) -> "FrameBlock":
        return FrameBlock(
            t=self.t[idx], seq=self.seq[idx], pos=self.pos[idx], valid=self.valid[idx]
        )

    @classmethod
    def merge(cls, blocks: list["FrameBlock"]) -> "FrameBlock":
        """Combine blocks frame-wise by seq.

        A frame's markers may be spread across blocks (e.g. streamed in
        separate batches); later finite positions fill earlier gaps.
        """
        blocks = [b for b in blocks if len(b)]
        if not blocks:
            return cls.empty()
        uniq = np.unique(np.concatenate([b.seq for b in blocks]))
        n = len(uniq)
        out = cls(
            t=np.zeros(n),
            seq=uniq,
            pos=np.full((n, N_MARKERS + 1, 3), np.nan),
            valid=np.zeros((n, N_MARKERS + 1), dtype=bool),
        )
        for b in blocks:
            idx = np.searchsorted(uniq, b.seq)
            out.t[idx] = b.t
            finite = np.all(np.isfinite(b.pos), axis=2)
            out.pos[idx] = np.where(finite[:, :, None], b.pos, out.pos[idx])
            out.valid[idx] |= b.valid
        return out


def biometrics_block(
    block: FrameBlock,
    chest_marker: int = DEFAULT_CHEST_MARKER,
    up_axis: int = 2,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized biometrics over a FrameBlock.

    Returns (values, ok): values is (n, 7) in BIOMETRIC_COLUMNS order,
    NaN where markers are missing; ok flags rows with every required
    marker valid.
    """
    required = _BIOMETRIC_REQUIRED[:-1] + (chest_marker,)
    ok = np.all(block.valid[:, list(required)], axis=1)
    n = len(block)
    values = np.full((n, 7), np.nan)
    if not np.any(ok):
        return values, ok

    p = block.pos[ok]
    kl = 180.0 - interior_angle(p[:, LEFT_ANKLE], p[:, LEFT_KNEE], p[:, LEFT_HIP])
    kr = 180.0 - interior_angle(p[:, RIGHT_ANKLE], p[:, RIGHT_KNEE], p[:, RIGHT_HIP])
    hl = 180.0 - interior_angle(p[:, chest_marker], p[:, LEFT_HIP], p[:, LEFT_KNEE])
    hr = 180.0 - interior_angle(p[:, chest_marker], p[:, RIGHT_HIP], p[:, RIGHT_KNEE])
    hip_vec = p[:, LEFT_HIP] - p[:, RIGHT_HIP]
    span = np.linalg.norm(hip_vec, axis=-1)
    if np.any(span == 0.0):
        raise DegenerateGeometry("hip markers coincide")
    ob = np.degrees(np.arcsin(np.clip(hip_vec[:, up_axis] / span, -1.0, 1.0)))

    values[ok, 0] = kl
    values[ok, 1] = kr
    values[ok, 2] = hl
    values[ok, 3] = hr
    values[ok, 4] = ob
    values[ok, 5] = kl - kr
    values[ok, 6] = hl - hr
    return values, ok


def biometric_series(
    frames: list[MarkerFrame] | FrameBlock,
    chest_marker: int = DEFAULT_CHEST_MARKER,
    up_axis: int = 2,
) -> list[BiometricSample | None]:
    """Biometrics per frame; None marks frames with missing markers."""
    block = frames if isinstance(frames, FrameBlock) else FrameBlock.from_frames(frames)
    values, ok = biometrics_block(block, chest_marker, up_axis)
    out: list[BiometricSample | None] = []
    for i in range(len(block)):
        if not ok[i]:
            out.append(None)
            continue
        v = values[i]
        out.append(
            BiometricSample(
                t=float(block.t[i]),
                knee_flexion_left=float(v[0]),
                knee_flexion_right=float(v[1]),
                hip_flexion_left=float(v[2]),
                hip_flexion_right=float(v[3]),
                pelvic_obliquity=float(v[4]),
                knee_diff=float(v[5]),
                hip_diff=float(v[6]),
            )
        )
    return out


def interpolate_gaps_block(block: FrameBlock, max_gap_frames: int) -> FrameBlock:
    """Linear per-marker interpolation across short invalid runs.

    Runs longer than max_gap_frames, and runs touching either end of the
    capture, stay invalid. Interpolation is linear in time.
    """
    if np.any(np.diff(block.seq) <= 0):
        raise UnsortedInput("frames must be sorted by strictly increasing seq")
    pos = block.pos.copy()
    valid = block.valid.copy()
    n = len(block)
    for mid in range(1, N_MARKERS + 1):
        col = valid[:, mid]
        if col.all() or not col.any():
            continue
        invalid_idx = np.flatnonzero(~col)
        # split into consecutive runs
        splits = np.flatnonzero(np.diff(invalid_idx) > 1) + 1
        for run in np.split(invalid_idx, splits):
            i0, i1 = run[0] - 1, run[-1] + 1
            if i0 < 0 or i1 >= n:
                continue
            if len(run) > max_gap_frames:
                continue
            if not (col[i0] and col[i1]):
                continue
            t0, t1 = block.t[i0], block.t[i1]
            w = (block.t[run] - t0) / (t1 - t0) if t1 > t0 else np.full(len(run), 0.5)
            pos[run, mid] = (1.0 - w)[:, None] * pos[i0, mid] + w[:, None] * pos[i1, mid]
            valid[run, mid] = True
    return FrameBlock(t=block.t.copy(), seq=block.seq.copy(), pos=pos, valid=valid)


def interpolate_gaps(
    frames: list[MarkerFrame], max_gap_frames: int = 24
) -> list[MarkerFrame]:
    """List-of-frames wrapper around interpolate_gaps_block."""
    return interpolate_gaps_block(FrameBlock.from_frames(frames), max_gap_frames).to_frames()


__all__ = [
    "N_MARKERS",
    "MarkerFrame",
    "BiometricSample",
    "FrameBlock",
    "BIOMETRIC_COLUMNS",
    "interior_angle",
    "knee_flexion",
    "hip_flexion",
    "pelvic_obliquity",
    "biometrics",
    "biometrics_block",
    "biometric_series",
    "interpolate_gaps",
    "interpolate_gaps_block",
]
