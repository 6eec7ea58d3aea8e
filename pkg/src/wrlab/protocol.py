"""Rep/set segmentation and the four-segment session timeline.

A rep opens when the mean left/right knee flexion rises through the enter
threshold and closes when it falls back through the (lower) exit
threshold; the hysteresis band rejects sway and partial dips. Sets are
delimited by explicit set-end events carried in the input stream, never
inferred from rest gaps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InsufficientReps, NonMonotonicTime
from .kinematics import BiometricSample

GROUPS = ("none", "visual", "resistance")
SEGMENT_LABELS = ("baseline", "training", "post", "retention")

# the study timeline: (sets, reps per set)
PLANNED_SEGMENTS = {
    "baseline": (1, 10),
    "training": (15, 5),
    "post": (1, 10),
    "retention": (1, 10),
}

DEFAULT_ENTER_DEG = 60.0
DEFAULT_EXIT_DEG = 20.0

REP_METRICS = (
    "max_knee_flexion",
    "max_hip_flexion",
    "peak_abs_obliquity",
    "peak_abs_knee_diff",
    "peak_abs_hip_diff",
)


@dataclass(frozen=True, slots=True)
class Rep:
    """One squat repetition with its summary metrics (degrees)."""

    start_t: float
    bottom_t: float
    end_t: float
    max_knee_flexion: float
    max_hip_flexion: float
    peak_abs_obliquity: float
    peak_abs_knee_diff: float
    peak_abs_hip_diff: float
    valid: bool = True

    def __post_init__(self):
        if not self.start_t < self.bottom_t < self.end_t:
            raise ValueError("rep times must satisfy start < bottom < end")

    def metric(self, name: str) -> float:
        return getattr(self, name)


@dataclass(slots=True)
class Segment:
    label: str
    sets: list[list[Rep]]

    def reps(self) -> list[Rep]:
        return [r for s in self.sets for r in s]


@dataclass(slots=True)
class SessionRecord:
    subject_id: str
    group: str
    segments: list[Segment]
    capture_rate_hz: float

    def segment(self, label: str) -> Segment:
        for seg in self.segments:
            if seg.label == label:
                return seg
        raise InsufficientReps(f"session has no {label!r} segment")


def find_rep_windows(
    t: np.ndarray,
    flexion: np.ndarray,
    enter_deg: float = DEFAULT_ENTER_DEG,
    exit_deg: float = DEFAULT_EXIT_DEG,
) -> list[tuple[int, int, int]]:
    """Hysteresis segmentation of a knee-flexion series.

    Returns (start, bottom, end) sample indices per rep. A rep still open
    at the end of the series is dropped.
    """
    if not enter_deg > exit_deg >= 0:
        raise ValueError("need enter_deg > exit_deg >= 0")
    t = np.asarray(t, dtype=float)
    flexion = np.asarray(flexion, dtype=float)
    if np.any(np.diff(t) < 0):
        raise NonMonotonicTime("series times must be non-decreasing")
    windows: list[tuple[int, int, int]] = []
    open_idx: int | None = None
    for i, v in enumerate(flexion):
        if open_idx is None:
            if v >= enter_deg:
                open_idx = i
        elif v <= exit_deg:
            seg = flexion[open_idx : i + 1]
            bottom = open_idx + int(np.argmax(seg))
            windows.append((open_idx, bottom, i))
            open_idx = None
    return windows


def segment_reps(
    samples: Sequence[BiometricSample],
    enter_deg: float = DEFAULT_ENTER_DEG,
    exit_deg: float = DEFAULT_EXIT_DEG,
    gap_times: Sequence[float] = (),
) -> list[Rep]:
    """Segment a biometric stream into reps with per-rep metrics.

    ``gap_times`` are timestamps of frames invalidated by occlusion; reps
    whose span covers any of them are kept but flagged invalid rather
    than imputed.
    """
    if not samples:
        return []
    t = np.array([s.t for s in samples])
    knee = np.array([s.mean_knee_flexion for s in samples])
    hip = np.array([s.mean_hip_flexion for s in samples])
    ob = np.array([s.pelvic_obliquity for s in samples])
    kd = np.array([s.knee_diff for s in samples])
    hd = np.array([s.hip_diff for s in samples])
    gaps = np.asarray(sorted(gap_times), dtype=float)

    reps = []
    for i0, ib, i1 in find_rep_windows(t, knee, enter_deg, exit_deg):
        start_t, bottom_t, end_t = float(t[i0]), float(t[ib]), float(t[i1])
        covered = gaps[(gaps >= start_t) & (gaps <= end_t)]
        sl = slice(i0, i1 + 1)
        reps.append(
            Rep(
                start_t=start_t,
                bottom_t=bottom_t,
                end_t=end_t,
                max_knee_flexion=float(knee[sl].max()),
                max_hip_flexion=float(hip[sl].max()),
                peak_abs_obliquity=float(np.abs(ob[sl]).max()),
                peak_abs_knee_diff=float(np.abs(kd[sl]).max()),
                peak_abs_hip_diff=float(np.abs(hd[sl]).max()),
                valid=covered.size == 0,
            )
        )
    return reps


def block_average(reps: Sequence[Rep], block_size: int = 10) -> dict[str, float]:
    """Per-metric means over the first block_size valid reps (chronological)."""
    valid = [r for r in reps if r.valid]
    if len(valid) < block_size:
        raise InsufficientReps(
            f"need {block_size} valid reps for a block, got {len(valid)}"
        )
    block = valid[:block_size]
    return {m: float(np.mean([r.metric(m) for r in block])) for m in REP_METRICS}


def last_block_average(reps: Sequence[Rep], block_size: int = 10) -> dict[str, float]:
    valid = [r for r in reps if r.valid]
    if len(valid) < block_size:
        raise InsufficientReps(
            f"need {block_size} valid reps for a block, got {len(valid)}"
        )
    block = valid[-block_size:]
    return {m: float(np.mean([r.metric(m) for r in block])) for m in REP_METRICS}


@dataclass(frozen=True, slots=True)
class TrainingDelta:
    start: dict[str, float]
    end: dict[str, float]
    delta: dict[str, float]


def training_start_end(session: SessionRecord, block_size: int = 10) -> TrainingDelta:
    """End-minus-start block deltas over the training segment's reps."""
    reps = session.segment("training").reps()
    start = block_average(reps, block_size)
    end = last_block_average(reps, block_size)
    delta = {m: end[m] - start[m] for m in REP_METRICS}
    return TrainingDelta(start=start, end=end, delta=delta)


def protocol_deviations(
    session: SessionRecord,
    planned_segments: dict[str, tuple[int, int]] | None = None,
) -> list[str]:
    """Differences from the planned timeline; informational, not fatal.

    Defaults to the study plan; pass the manifest's plan for sessions that
    declare their own.
    """
    plan = planned_segments if planned_segments is not None else PLANNED_SEGMENTS
    notes = []
    seen = [s.label for s in session.segments]
    for label in plan:
        if label not in seen:
            notes.append(f"missing segment {label}")
    for seg in session.segments:
        planned = plan.get(seg.label)
        if planned is None:
            notes.append(f"unexpected segment {seg.label}")
            continue
        n_sets, n_reps = planned
        if len(seg.sets) != n_sets:
            notes.append(
                f"{seg.label}: planned {n_sets} sets, observed {len(seg.sets)}"
            )
        for k, reps in enumerate(seg.sets, start=1):
            if len(reps) != n_reps:
                notes.append(
                    f"{seg.label} set {k}: planned {n_reps} reps, observed {len(reps)}"
                )
    return notes


# ---------------------------------------------------------------------------
# Session manifest
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class Thresholds:
    enter_deg: float = DEFAULT_ENTER_DEG
    exit_deg: float = DEFAULT_EXIT_DEG
    depth_min_flexion: float = 110.0
    posture_max_hip_flexion: float = 130.0
    symmetry_max: float = 5.0
    max_gap_frames: int = 24

    def to_dict(self) -> dict:
        return {
            "enter_deg": self.enter_deg,
            "exit_deg": self.exit_deg,
            "depth_min_flexion": self.depth_min_flexion,
            "posture_max_hip_flexion": self.posture_max_hip_flexion,
            "symmetry_max": self.symmetry_max,
            "max_gap_frames": self.max_gap_frames,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Thresholds":
        out = cls()
        for key, value in d.items():
            if not hasattr(out, key):
                raise ValueError(f"unknown threshold {key!r}")
            setattr(out, key, type(getattr(out, key))(value))
        return out


@dataclass(slots=True)
class PlannedSegment:
    label: str
    planned_sets: int
    planned_reps: int


@dataclass(slots=True)
class SessionManifest:
    """Session configuration: who, which arm, capture setup, thresholds."""

    subject_id: str
    group: str
    capture_rate_hz: float = 480.0
    vertical_axis: str = "z"
    thresholds: Thresholds = field(default_factory=Thresholds)
    segments: list[PlannedSegment] = field(default_factory=list)
    l0_left_cm: float | None = None
    l0_right_cm: float | None = None
    rest_pose_s: float | None = None
    feedback_training_only: bool = True

    def __post_init__(self):
        if self.group not in GROUPS:
            raise ValueError(f"group must be one of {GROUPS}, got {self.group!r}")
        if self.vertical_axis not in ("x", "y", "z"):
            raise ValueError("vertical_axis must be x, y, or z")
        if not self.segments:
            self.segments = [
                PlannedSegment(label, s, r)
                for label, (s, r) in PLANNED_SEGMENTS.items()
            ]

    @property
    def up_axis(self) -> int:
        return "xyz".index(self.vertical_axis)

    def planned_total_sets(self) -> int:
        return sum(s.planned_sets for s in self.segments)

    def segment_of_set(self, set_index: int) -> tuple[str, int]:
        """Map a 1-based global set index to (segment label, set-in-segment)."""
        k = set_index
        for seg in self.segments:
            if k <= seg.planned_sets:
                return seg.label, k
            k -= seg.planned_sets
        return self.segments[-1].label, k + self.segments[-1].planned_sets

    def to_dict(self) -> dict:
        d = {
            "subject_id": self.subject_id,
            "group": self.group,
            "capture_rate_hz": self.capture_rate_hz,
            "vertical_axis": self.vertical_axis,
            "thresholds": self.thresholds.to_dict(),
            "segments": [
                {"label": s.label, "planned_sets": s.planned_sets,
                 "planned_reps": s.planned_reps}
                for s in self.segments
            ],
            "feedback_training_only": self.feedback_training_only,
        }
        if self.l0_left_cm is not None:
            d["l0_left_cm"] = self.l0_left_cm
        if self.l0_right_cm is not None:
            d["l0_right_cm"] = self.l0_right_cm
        if self.rest_pose_s is not None:
            d["rest_pose_s"] = self.rest_pose_s
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SessionManifest":
        known = {
            "subject_id", "group", "capture_rate_hz", "vertical_axis",
            "thresholds", "segments", "l0_left_cm", "l0_right_cm",
            "rest_pose_s", "feedback_training_only",
        }
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown manifest keys: {sorted(unknown)}")
        if "subject_id" not in d or "group" not in d:
            raise ValueError("manifest requires subject_id and group")
        segments = [
            PlannedSegment(s["label"], int(s["planned_sets"]), int(s["planned_reps"]))
            for s in d.get("segments", [])
        ]
        return cls(
            subject_id=str(d["subject_id"]),
            group=str(d["group"]),
            capture_rate_hz=float(d.get("capture_rate_hz", 480.0)),
            vertical_axis=str(d.get("vertical_axis", "z")),
            thresholds=Thresholds.from_dict(d.get("thresholds", {})),
            segments=segments,
            l0_left_cm=None if d.get("l0_left_cm") is None else float(d["l0_left_cm"]),
            l0_right_cm=None if d.get("l0_right_cm") is None else float(d["l0_right_cm"]),
            rest_pose_s=None if d.get("rest_pose_s") is None else float(d["rest_pose_s"]),
            feedback_training_only=bool(d.get("feedback_training_only", True)),
        )


def assemble_session(
    manifest: SessionManifest, sets: list[list[Rep]]
) -> SessionRecord:
    """Assign a flat chronological list of sets to the planned segments.

    Sets fill each planned segment in order; surplus sets attach to the
    final segment and surface as protocol deviations.
    """
    segments = []
    cursor = 0
    for planned in manifest.segments:
        take = sets[cursor : cursor + planned.planned_sets]
        segments.append(Segment(label=planned.label, sets=take))
        cursor += planned.planned_sets
    if cursor < len(sets):
        segments[-1].sets.extend(sets[cursor:])
    return SessionRecord(
        subject_id=manifest.subject_id,
        group=manifest.group,
        segments=segments,
        capture_rate_hz=manifest.capture_rate_hz,
    )


__all__ = [
    "GROUPS",
    "SEGMENT_LABELS",
    "PLANNED_SEGMENTS",
    "REP_METRICS",
    "Rep",
    "Segment",
    "SessionRecord",
    "TrainingDelta",
    "Thresholds",
    "PlannedSegment",
    "SessionManifest",
    "find_rep_windows",
    "segment_reps",
    "block_average",
    "last_block_average",
    "training_start_end",
    "protocol_deviations",
    "assemble_session",
]
