"""Per-set form verdicts: the three green/red tiles shown after each set.

The three measures mirror the coaching instruction (squat deep, stay
upright, stay symmetric). Their numeric thresholds are this artifact's
choices, configurable through the session manifest; medians over the
set's reps keep one bad rep from flipping a verdict.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from statistics import median
from typing import Sequence

from .errors import NoValidReps
from .protocol import Rep, Thresholds

GREEN = "green"
RED = "red"

VERDICT_KEYS = ("depth", "posture", "symmetry")


@dataclass(frozen=True, slots=True)
class FormThresholds:
    """Verdict cutoffs, all in degrees."""

    depth_min_flexion: float = 110.0
    posture_max_hip_flexion: float = 130.0
    symmetry_max: float = 5.0

    def __post_init__(self):
        if min(self.depth_min_flexion, self.posture_max_hip_flexion, self.symmetry_max) <= 0:
            raise ValueError("all thresholds must be positive")

    @classmethod
    def from_manifest(cls, th: Thresholds) -> "FormThresholds":
        return cls(
            depth_min_flexion=th.depth_min_flexion,
            posture_max_hip_flexion=th.posture_max_hip_flexion,
            symmetry_max=th.symmetry_max,
        )


@dataclass(frozen=True, slots=True)
class SetFeedback:
    """The three verdicts for one completed set."""

    set_index: int
    verdicts: dict[str, str]
    per_rep_detail: list[dict] = field(default_factory=list)

    def __post_init__(self):
        if set(self.verdicts) != set(VERDICT_KEYS):
            raise ValueError(f"verdicts must be exactly {VERDICT_KEYS}")
        for key, value in self.verdicts.items():
            if value not in (GREEN, RED):
                raise ValueError(f"verdict {key} must be green or red, got {value!r}")

    def to_event_dict(self) -> dict:
        return {
            "set_index": self.set_index,
            "depth": self.verdicts["depth"],
            "posture": self.verdicts["posture"],
            "symmetry": self.verdicts["symmetry"],
        }

    def to_event_line(self) -> str:
        """Canonical single-line JSON; the replay-determinism unit."""
        return json.dumps(self.to_event_dict(), sort_keys=True, separators=(",", ":"))


def evaluate_set(
    reps: Sequence[Rep],
    thresholds: FormThresholds = FormThresholds(),
    set_index: int = 1,
) -> SetFeedback:
    """Verdicts from the set's valid reps.

    depth green: median max knee flexion reaches the depth target.
    posture green: median max hip flexion stays under the lean cap.
    symmetry green: medians of all three peak asymmetries stay under the
    symmetry cap.
    """
    valid = [r for r in reps if r.valid]
    if not valid:
        raise NoValidReps("set has no valid reps to evaluate")
    med_knee = median(r.max_knee_flexion for r in valid)
    med_hip = median(r.max_hip_flexion for r in valid)
    med_ob = median(r.peak_abs_obliquity for r in valid)
    med_kd = median(r.peak_abs_knee_diff for r in valid)
    med_hd = median(r.peak_abs_hip_diff for r in valid)
    verdicts = {
        "depth": GREEN if med_knee >= thresholds.depth_min_flexion else RED,
        "posture": GREEN if med_hip <= thresholds.posture_max_hip_flexion else RED,
        "symmetry": (
            GREEN
            if max(med_ob, med_kd, med_hd) <= thresholds.symmetry_max
            else RED
        ),
    }
    detail = [
        {
            "max_knee_flexion": r.max_knee_flexion,
            "max_hip_flexion": r.max_hip_flexion,
            "peak_abs_obliquity": r.peak_abs_obliquity,
            "peak_abs_knee_diff": r.peak_abs_knee_diff,
            "peak_abs_hip_diff": r.peak_abs_hip_diff,
            "valid": r.valid,
        }
        for r in reps
    ]
    return SetFeedback(set_index=set_index, verdicts=verdicts, per_rep_detail=detail)


__all__ = ["GREEN", "RED", "VERDICT_KEYS", "FormThresholds", "SetFeedback", "evaluate_set"]
