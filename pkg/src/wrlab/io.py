"""File formats: marker frames, biometrics, reps, forces, manifests.

The frame CSV is long-format (one row per marker per frame) with set
boundaries carried as control rows whose marker column reads SET_END.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .bandforce import BandForceSample
from .errors import ParseError, SchemaError
from .kinematics import BIOMETRIC_COLUMNS, N_MARKERS, FrameBlock
from .protocol import Rep, SessionManifest

FRAME_CSV_HEADER = ["time_s", "seq", "marker_id", "x_m", "y_m", "z_m", "valid"]
SET_END = "SET_END"

BIOMETRIC_CSV_HEADER = ["time_s", *BIOMETRIC_COLUMNS]
REP_CSV_HEADER = [
    "segment", "set_index", "rep_index", "start_t", "bottom_t", "end_t",
    "max_knee_flexion", "max_hip_flexion", "peak_abs_obliquity",
    "peak_abs_knee_diff", "peak_abs_hip_diff", "valid",
]
FORCE_CSV_HEADER = [
    "t", "side", "length_cm", "force_n", "dir_x", "dir_y", "dir_z", "extrapolated",
]


def write_frames_csv(
    path: str | Path,
    block: FrameBlock,
    controls: list[tuple[float, int]] = (),
) -> None:
    """Frames in seq order with SET_END control rows spliced in."""
    controls = sorted(controls, key=lambda c: c[1])
    ci = 0
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(FRAME_CSV_HEADER)
        for i in range(len(block)):
            seq = int(block.seq[i])
            while ci < len(controls) and controls[ci][1] < seq:
                writer.writerow([repr(controls[ci][0]), controls[ci][1], SET_END,
                                 "", "", "", ""])
                ci += 1
            t_repr = repr(float(block.t[i]))
            for mid in range(1, N_MARKERS + 1):
                p = block.pos[i, mid]
                if not np.all(np.isfinite(p)) and not block.valid[i, mid]:
                    continue
                writer.writerow(
                    [t_repr, seq, mid, repr(float(p[0])), repr(float(p[1])),
                     repr(float(p[2])), int(bool(block.valid[i, mid]))]
                )
        while ci < len(controls):
            writer.writerow([repr(controls[ci][0]), controls[ci][1], SET_END,
                             "", "", "", ""])
            ci += 1


def read_frames_csv(path: str | Path) -> tuple[FrameBlock, list[tuple[float, int]]]:
    """Parse the long-format frame CSV back into a block plus controls."""
    path = Path(path)
    times: list[float] = []
    seqs: list[int] = []
    rows_by_frame: dict[int, list[tuple[int, float, float, float, bool]]] = {}
    frame_time: dict[int, float] = {}
    controls: list[tuple[float, int]] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected header") from None
        if [h.strip() for h in header] != FRAME_CSV_HEADER:
            raise SchemaError(
                f"{path}: expected header {','.join(FRAME_CSV_HEADER)}, "
                f"got {','.join(header)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(FRAME_CSV_HEADER):
                raise ParseError(f"expected 7 fields, got {len(row)}", line=lineno)
            try:
                t = float(row[0])
                seq = int(row[1])
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from exc
            marker = row[2].strip()
            if marker == SET_END:
                controls.append((t, seq))
                continue
            try:
                mid = int(marker)
                x, y, z = float(row[3]), float(row[4]), float(row[5])
                valid = row[6].strip() in ("1", "true", "True")
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from exc
            if not 1 <= mid <= N_MARKERS:
                raise ParseError(f"marker id {mid} outside [1, {N_MARKERS}]",
                                 line=lineno)
            rows_by_frame.setdefault(seq, []).append((mid, x, y, z, valid))
            frame_time[seq] = t
    seq_sorted = sorted(rows_by_frame)
    n = len(seq_sorted)
    block = FrameBlock(
        t=np.zeros(n),
        seq=np.asarray(seq_sorted, dtype=np.int64),
        pos=np.full((n, N_MARKERS + 1, 3), np.nan),
        valid=np.zeros((n, N_MARKERS + 1), dtype=bool),
    )
    for i, seq in enumerate(seq_sorted):
        block.t[i] = frame_time[seq]
        for mid, x, y, z, valid in rows_by_frame[seq]:
            block.pos[i, mid] = (x, y, z)
            block.valid[i, mid] = valid and np.isfinite([x, y, z]).all()
    return block, sorted(controls, key=lambda c: c[1])


def frame_rows_to_block(rows: list[dict]) -> FrameBlock:
    """Service-side assembly of JSON frame rows (same schema as the CSV)."""
    rows_by_frame: dict[int, list[tuple[int, float, float, float, bool]]] = {}
    frame_time: dict[int, float] = {}
    for row in rows:
        try:
            seq = int(row["seq"])
            mid = int(row["marker_id"])
            t = float(row["time_s"])
            x, y, z = float(row["x_m"]), float(row["y_m"]), float(row["z_m"])
            valid = bool(row.get("valid", True))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad frame row {row!r}: {exc}") from exc
        if not 1 <= mid <= N_MARKERS:
            raise SchemaError(f"marker id {mid} outside [1, {N_MARKERS}]")
        rows_by_frame.setdefault(seq, []).append((mid, x, y, z, valid))
        frame_time[seq] = t
    seq_sorted = sorted(rows_by_frame)
    n = len(seq_sorted)
    block = FrameBlock(
        t=np.zeros(n),
        seq=np.asarray(seq_sorted, dtype=np.int64),
        pos=np.full((n, N_MARKERS + 1, 3), np.nan),
        valid=np.zeros((n, N_MARKERS + 1), dtype=bool),
    )
    for i, seq in enumerate(seq_sorted):
        block.t[i] = frame_time[seq]
        for mid, x, y, z, valid in rows_by_frame[seq]:
            block.pos[i, mid] = (x, y, z)
            block.valid[i, mid] = valid and np.isfinite([x, y, z]).all()
    return block


def write_biometrics_csv(
    path: str | Path, t: np.ndarray, values: np.ndarray, ok: np.ndarray
) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(BIOMETRIC_CSV_HEADER)
        for i in range(len(t)):
            if not ok[i]:
                continue
            writer.writerow([repr(float(t[i]))] + [repr(float(v)) for v in values[i]])


def write_reps_csv(path: str | Path, labeled_reps: list[tuple[str, int, int, Rep]]) -> None:
    """Rows of (segment label, global set index, rep index, rep)."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(REP_CSV_HEADER)
        for segment, set_index, rep_index, rep in labeled_reps:
            writer.writerow(
                [
                    segment, set_index, rep_index,
                    repr(rep.start_t), repr(rep.bottom_t), repr(rep.end_t),
                    repr(rep.max_knee_flexion), repr(rep.max_hip_flexion),
                    repr(rep.peak_abs_obliquity), repr(rep.peak_abs_knee_diff),
                    repr(rep.peak_abs_hip_diff), int(rep.valid),
                ]
            )


def write_forces_csv(path: str | Path, samples: list[BandForceSample]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(FORCE_CSV_HEADER)
        for s in samples:
            writer.writerow(
                [
                    repr(s.t), s.side, repr(s.length_cm), repr(s.force_n),
                    repr(s.direction[0]), repr(s.direction[1]), repr(s.direction[2]),
                    int(s.extrapolated),
                ]
            )


def save_manifest(manifest: SessionManifest, path: str | Path) -> None:
    Path(path).write_text(json.dumps(manifest.to_dict(), indent=2) + "\n",
                          encoding="utf-8")


def load_manifest(path: str | Path) -> SessionManifest:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    try:
        return SessionManifest.from_dict(data)
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def write_ground_truth_csv(path: str | Path, truth) -> None:
    """Sidecar with the simulator's commanded/modeled per-frame values."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["t", "rep_index", "completion", "knee_cmd_deg", "hip_cmd_deg",
             "obliquity_deg", "knee_left_deg", "knee_right_deg",
             "band_len_left_cm", "band_len_right_cm"]
        )
        for i in range(len(truth.t)):
            writer.writerow(
                [
                    repr(float(truth.t[i])), int(truth.rep_index[i]),
                    repr(float(truth.completion[i])),
                    repr(float(truth.knee_cmd_deg[i])),
                    repr(float(truth.hip_cmd_deg[i])),
                    repr(float(truth.obliquity_deg[i])),
                    repr(float(truth.knee_left_deg[i])),
                    repr(float(truth.knee_right_deg[i])),
                    repr(float(truth.band_len_left_cm[i])),
                    repr(float(truth.band_len_right_cm[i])),
                ]
            )


__all__ = [
    "FRAME_CSV_HEADER",
    "SET_END",
    "BIOMETRIC_CSV_HEADER",
    "REP_CSV_HEADER",
    "FORCE_CSV_HEADER",
    "write_frames_csv",
    "read_frames_csv",
    "frame_rows_to_block",
    "write_biometrics_csv",
    "write_reps_csv",
    "write_forces_csv",
    "save_manifest",
    "load_manifest",
    "write_ground_truth_csv",
]
