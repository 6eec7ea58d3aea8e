"""Session analysis shared by the batch CLI and the streaming service.

Both paths funnel a set's frames through the same function, so a session
streamed frame-by-frame produces byte-identical feedback events to a
batch run over the same data: gap interpolation, biometrics, and rep
segmentation all operate within one set's window.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io as wio
from .bandforce import BAND_MARKERS, BandForceSample, estimate_rest_length
from .calibration import BandCalibration
from .errors import InsufficientFrames, InsufficientReps
from .feedback import FormThresholds, SetFeedback, evaluate_set
from .kinematics import (
    BIOMETRIC_COLUMNS,
    BiometricSample,
    FrameBlock,
    biometrics_block,
    interpolate_gaps_block,
)
from .protocol import (
    Rep,
    SessionManifest,
    SessionRecord,
    TrainingDelta,
    assemble_session,
    protocol_deviations,
    segment_reps,
    training_start_end,
)


@dataclass(slots=True)
class ForceTable:
    """Per-frame force estimates for one band side."""

    side: str
    l0_cm: float
    t: np.ndarray
    length_cm: np.ndarray
    force_n: np.ndarray
    direction: np.ndarray     # (n, 3)
    extrapolated: np.ndarray  # bool
    ok: np.ndarray            # both band markers valid

    def samples(self) -> list[BandForceSample]:
        out = []
        for i in np.flatnonzero(self.ok):
            out.append(
                BandForceSample(
                    t=float(self.t[i]),
                    side=self.side,
                    length_cm=float(self.length_cm[i]),
                    delta_l_cm=float(self.length_cm[i]) - self.l0_cm,
                    force_n=float(self.force_n[i]),
                    direction=tuple(float(c) for c in self.direction[i]),
                    extrapolated=bool(self.extrapolated[i]),
                )
            )
        return out


@dataclass(slots=True)
class SessionResult:
    manifest: SessionManifest
    record: SessionRecord
    sets: list[list[Rep]]
    feedback: list[SetFeedback]
    biometrics_t: np.ndarray
    biometrics: np.ndarray
    biometrics_ok: np.ndarray
    l0_left_cm: float | None
    l0_right_cm: float | None
    deviations: list[str]
    training_delta: TrainingDelta | None
    forces: dict[str, ForceTable] = field(default_factory=dict)

    def feedback_lines(self) -> str:
        return "".join(f.to_event_line() + "\n" for f in self.feedback)


def split_sets(
    block: FrameBlock, controls: list[tuple[float, int]]
) -> list[FrameBlock]:
    """Cut the frame stream into per-set windows at the SET_END seqs.

    Frames after the final control form an unterminated set and are not
    returned; callers surface that as a protocol deviation.
    """
    out = []
    prev_seq = -1
    for _, ctrl_seq in sorted(controls, key=lambda c: c[1]):
        idx = np.flatnonzero((block.seq > prev_seq) & (block.seq <= ctrl_seq))
        out.append(block.slice(idx))
        prev_seq = ctrl_seq
    return out


def rest_lengths(
    manifest: SessionManifest, block: FrameBlock
) -> tuple[float | None, float | None]:
    """Band rest lengths (cm) from the manifest or the slack-pose window."""
    l0_left, l0_right = manifest.l0_left_cm, manifest.l0_right_cm
    if (l0_left is None or l0_right is None) and manifest.rest_pose_s is not None:
        if len(block):
            t0 = float(block.t[0])
            idx = np.flatnonzero(block.t - t0 <= manifest.rest_pose_s)
            window = block.slice(idx)
            frames = window.to_frames()
            try:
                if l0_left is None:
                    l0_left = estimate_rest_length(frames, "left")
                if l0_right is None:
                    l0_right = estimate_rest_length(frames, "right")
            except InsufficientFrames:
                pass
    return l0_left, l0_right


def set_reps(set_block: FrameBlock, manifest: SessionManifest) -> list[Rep]:
    """Gap-fill, biometrics, and rep segmentation for one set's window."""
    th = manifest.thresholds
    filled = interpolate_gaps_block(set_block, th.max_gap_frames)
    values, ok = biometrics_block(filled, up_axis=manifest.up_axis)
    samples = []
    for i in np.flatnonzero(ok):
        v = values[i]
        samples.append(
            BiometricSample(
                t=float(filled.t[i]),
                knee_flexion_left=float(v[0]),
                knee_flexion_right=float(v[1]),
                hip_flexion_left=float(v[2]),
                hip_flexion_right=float(v[3]),
                pelvic_obliquity=float(v[4]),
                knee_diff=float(v[5]),
                hip_diff=float(v[6]),
            )
        )
    gap_times = [float(t) for t in filled.t[~ok]]
    return segment_reps(
        samples,
        enter_deg=th.enter_deg,
        exit_deg=th.exit_deg,
        gap_times=gap_times,
    )


def band_force_table(
    block: FrameBlock, side: str, l0_cm: float, cal: BandCalibration
) -> ForceTable:
    """Vectorized per-frame force for one side.

    Uses the same arithmetic as bandforce.band_force elementwise, so the
    scalar API and this table agree bit-for-bit.
    """
    knee_id, wrist_id = BAND_MARKERS[side]
    ok = block.valid[:, knee_id] & block.valid[:, wrist_id]
    diff = block.pos[:, knee_id] - block.pos[:, wrist_id]
    dist_m = np.linalg.norm(diff, axis=1)
    length_cm = dist_m * 100.0
    equivalent_d = cal.l_cal_cm / l0_cm * (length_cm - l0_cm)
    force = np.maximum(0.0, cal.k_cal * equivalent_d + cal.f_i)
    extrapolated = ~((cal.d_min_cm <= equivalent_d) & (equivalent_d <= cal.d_max_cm))
    with np.errstate(invalid="ignore", divide="ignore"):
        direction = diff / dist_m[:, None]
    return ForceTable(
        side=side,
        l0_cm=l0_cm,
        t=block.t,
        length_cm=length_cm,
        force_n=np.where(ok, force, np.nan),
        direction=direction,
        extrapolated=extrapolated,
        ok=ok,
    )


def analyze_session(
    block: FrameBlock,
    controls: list[tuple[float, int]],
    manifest: SessionManifest,
    cal: BandCalibration | None = None,
) -> SessionResult:
    """Full batch analysis of one session's frame stream."""
    set_blocks = split_sets(block, controls)
    deviations: list[str] = []
    if controls:
        tail = int(np.count_nonzero(block.seq > max(c[1] for c in controls)))
        if tail:
            deviations.append(f"{tail} frames after the final set end were ignored")
    else:
        deviations.append("no set-end controls; no sets evaluated")

    sets: list[list[Rep]] = []
    feedback: list[SetFeedback] = []
    thresholds = FormThresholds.from_manifest(manifest.thresholds)
    for k, set_block in enumerate(set_blocks, start=1):
        reps = set_reps(set_block, manifest)
        sets.append(reps)
        if any(r.valid for r in reps):
            feedback.append(evaluate_set(reps, thresholds, set_index=k))
        else:
            deviations.append(f"set {k}: no valid reps, no feedback event")

    record = assemble_session(manifest, sets)
    plan = {s.label: (s.planned_sets, s.planned_reps) for s in manifest.segments}
    deviations.extend(protocol_deviations(record, plan))

    try:
        delta = training_start_end(record)
    except InsufficientReps:
        delta = None

    values, ok = biometrics_block(block, up_axis=manifest.up_axis)

    result = SessionResult(
        manifest=manifest,
        record=record,
        sets=sets,
        feedback=feedback,
        biometrics_t=block.t,
        biometrics=values,
        biometrics_ok=ok,
        l0_left_cm=None,
        l0_right_cm=None,
        deviations=deviations,
        training_delta=delta,
    )
    if cal is not None:
        l0_left, l0_right = rest_lengths(manifest, block)
        result.l0_left_cm = l0_left
        result.l0_right_cm = l0_right
        if l0_left is not None:
            result.forces["left"] = band_force_table(block, "left", l0_left, cal)
        if l0_right is not None:
            result.forces["right"] = band_force_table(block, "right", l0_right, cal)
        if not result.forces:
            result.deviations.append(
                "no band rest length available; force estimation skipped"
            )
    return result


def _correlation(x: np.ndarray, y: np.ndarray) -> float | None:
    ok = np.isfinite(x) & np.isfinite(y)
    if np.count_nonzero(ok) < 3:
        return None
    xs, ys = x[ok], y[ok]
    if np.std(xs) == 0.0 or np.std(ys) == 0.0:
        return None
    return float(np.corrcoef(xs, ys)[0, 1])


def session_report_dict(result: SessionResult) -> dict:
    """The JSON session report: counts, deltas, force/biometric summary."""
    record = result.record
    report: dict = {
        "subject_id": record.subject_id,
        "group": record.group,
        "capture_rate_hz": record.capture_rate_hz,
        "segments": [
            {
                "label": seg.label,
                "sets": len(seg.sets),
                "reps_per_set": [len(s) for s in seg.sets],
                "valid_reps": sum(1 for r in seg.reps() if r.valid),
            }
            for seg in record.segments
        ],
        "deviations": result.deviations,
        "l0_left_cm": result.l0_left_cm,
        "l0_right_cm": result.l0_right_cm,
        "feedback": [f.to_event_dict() for f in result.feedback],
    }
    if result.training_delta is not None:
        report["training_start_end"] = {
            "start": result.training_delta.start,
            "end": result.training_delta.end,
            "delta": result.training_delta.delta,
        }
    if result.forces:
        force_summary = {}
        values, ok = result.biometrics, result.biometrics_ok
        mean_knee = np.where(ok, (values[:, 0] + values[:, 1]) / 2.0, np.nan)
        mean_hip = np.where(ok, (values[:, 2] + values[:, 3]) / 2.0, np.nan)
        for side, table in result.forces.items():
            f = np.where(table.ok, table.force_n, np.nan)
            in_range = f[np.isfinite(f)]
            force_summary[side] = {
                "min_n": float(np.nanmin(f)) if in_range.size else None,
                "max_n": float(np.nanmax(f)) if in_range.size else None,
                "mean_n": float(np.nanmean(f)) if in_range.size else None,
                "fraction_in_10_40_n": (
                    float(np.mean((in_range >= 10.0) & (in_range <= 40.0)))
                    if in_range.size else None
                ),
                "extrapolated_fraction": float(np.mean(table.extrapolated[table.ok]))
                if table.ok.any() else None,
                "corr_force_vs_knee_angle": _correlation(f, mean_knee),
                "corr_force_vs_hip_angle": _correlation(f, mean_hip),
            }
        if "left" in result.forces and "right" in result.forces:
            fl = np.where(result.forces["left"].ok, result.forces["left"].force_n, np.nan)
            fr = np.where(result.forces["right"].ok, result.forces["right"].force_n, np.nan)
            fdiff = fl - fr
            force_summary["difference"] = {
                "corr_vs_knee_diff": _correlation(fdiff, values[:, 5]),
                "corr_vs_hip_diff": _correlation(fdiff, values[:, 6]),
                "corr_vs_pelvic_obliquity": _correlation(fdiff, values[:, 4]),
            }
        report["forces"] = force_summary
    return report


def labeled_reps(result: SessionResult) -> list[tuple[str, int, int, Rep]]:
    rows = []
    set_index = 0
    for seg in result.record.segments:
        for reps in seg.sets:
            set_index += 1
            for i, rep in enumerate(reps, start=1):
                rows.append((seg.label, set_index, i, rep))
    return rows


def write_session_report(result: SessionResult, out_dir: str | Path) -> None:
    """biometrics.csv, reps.csv, forces.csv, feedback.jsonl, report.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    wio.write_biometrics_csv(
        out / "biometrics.csv", result.biometrics_t, result.biometrics,
        result.biometrics_ok,
    )
    wio.write_reps_csv(out / "reps.csv", labeled_reps(result))
    if result.forces:
        samples = []
        for side in ("left", "right"):
            if side in result.forces:
                samples.extend(result.forces[side].samples())
        samples.sort(key=lambda s: (s.t, s.side))
        wio.write_forces_csv(out / "forces.csv", samples)
    (out / "feedback.jsonl").write_text(result.feedback_lines(), encoding="utf-8")
    (out / "report.json").write_text(
        json.dumps(session_report_dict(result), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def analyze_session_dir(
    session_dir: str | Path, cal: BandCalibration | None = None
) -> SessionResult:
    session_dir = Path(session_dir)
    manifest = wio.load_manifest(session_dir / "manifest.json")
    block, controls = wio.read_frames_csv(session_dir / "frames.csv")
    return analyze_session(block, controls, manifest, cal)


def cohort_deltas(
    results: list[SessionResult],
) -> dict[str, dict[str, list[float]]]:
    """metric -> group -> per-subject training start-to-end deltas."""
    out: dict[str, dict[str, list[float]]] = {}
    for result in results:
        if result.training_delta is None:
            continue
        for metric, value in result.training_delta.delta.items():
            out.setdefault(metric, {}).setdefault(result.record.group, []).append(value)
    return out


__all__ = [
    "ForceTable",
    "SessionResult",
    "split_sets",
    "rest_lengths",
    "set_reps",
    "band_force_table",
    "analyze_session",
    "analyze_session_dir",
    "session_report_dict",
    "labeled_reps",
    "write_session_report",
    "cohort_deltas",
]
