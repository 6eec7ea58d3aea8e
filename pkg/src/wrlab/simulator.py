"""Synthetic subjects: forward-kinematic marker streams plus band model.

The skeleton is a rigid-segment chain driven by sinusoidal joint commands;
leg poses come from exact two-link inverse kinematics, so commanded knee
flexion and pelvic obliquity are recovered exactly by the marker-side
pipeline at zero noise. The elastic band is modeled as one effective path
wrist-strap -> frame anchor -> knee-strap plus a fixed routing allowance
on the frame; the sewn-marker separation scales with the band's relative
stretch. Poor form superimposes a pelvic tilt, which tilts the strap
routing and shifts the two sides' stretch in opposite directions.

Anchor offsets, routing lengths, and per-exercise fit factors are tuned
constants chosen to land the force plateaus and ranges observed on the
real device; they are not measurements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kinematics as kin
from .calibration import BandCalibration
from .errors import InvalidAnthropometry
from .kinematics import FrameBlock
from .protocol import SessionManifest

EXERCISE_KINDS = ("coronal", "sagittal", "transverse", "squat", "lunge")
FORMS = ("good", "poor")

# device model (meters unless noted); tuned, not measured
ANCHOR_LATERAL = 0.10
ANCHOR_BACK = 0.12
ANCHOR_DROP = 0.20          # below the shoulder line, on the pack frame
FRAME_ROUTING_M = 0.15      # extra band path across the frame pulleys
BAND_SEGMENT_REST_M = 0.25  # sewn-marker separation with the band unloaded
BAND_MARKER_OFFSET_M = 0.03  # wrist-side sewn marker offset from the strap
TILT_ROUTING_GAIN = 1.1     # per-radian stretch asymmetry under pelvic tilt

# pretension fit: rest length as a fraction of the start-pose path length
FIT_FACTORS = {
    "squat": 0.845,
    "coronal": 0.845,
    "sagittal": 0.930,
    "transverse": 0.917,
    "lunge": 0.925,
}

# arm elevation sweeps per exercise (degrees from horizontal)
CORONAL_SWEEP = (90.0, -70.0)   # overhead down to the sides and back
SAGITTAL_SWEEP = (-45.0, 90.0)  # forward-low up to overhead and back
TRANSVERSE_ELEVATION = -10.0    # hands held at chest height
TRANSVERSE_AZIMUTH = 70.0       # horizontal sweep amplitude
LUNGE_ELEVATION = -10.0
LUNGE_DEPTH_DEG = 40.0

DEFAULT_DEPTH_DEG = 120.0
SHANK_TILT_RATIO = 0.5   # shank lean as a fraction of knee flexion
TORSO_PITCH_RATIO = 0.25  # torso pitch as a fraction of knee flexion (squat)


@dataclass(frozen=True, slots=True)
class Anthropometry:
    """Segment lengths (m) of the rigid skeleton."""

    height_m: float = 1.75
    ankle_height_m: float = 0.08
    shank_m: float = 0.43
    thigh_m: float = 0.43
    hip_width_m: float = 0.34
    torso_length_m: float = 0.52
    shoulder_width_m: float = 0.40
    arm_length_m: float = 0.55

    def __post_init__(self):
        values = (
            self.height_m, self.ankle_height_m, self.shank_m, self.thigh_m,
            self.hip_width_m, self.torso_length_m, self.shoulder_width_m,
            self.arm_length_m,
        )
        if any(v <= 0 for v in values):
            raise InvalidAnthropometry("all segment lengths must be positive")
        if self.ankle_height_m + self.shank_m + self.thigh_m + self.torso_length_m > self.height_m * 1.2:
            raise InvalidAnthropometry("segment stack exceeds plausible stature")

    @classmethod
    def from_height(cls, height_m: float) -> "Anthropometry":
        s = height_m / 1.75
        return cls(
            height_m=height_m,
            ankle_height_m=0.08 * s,
            shank_m=0.43 * s,
            thigh_m=0.43 * s,
            hip_width_m=0.34 * s,
            torso_length_m=0.52 * s,
            shoulder_width_m=0.40 * s,
            arm_length_m=0.55 * s,
        )


@dataclass(frozen=True, slots=True)
class ExerciseSpec:
    kind: str = "squat"
    form: str = "good"
    reps: int = 5
    cadence_s: float = 3.0
    anthropometry: Anthropometry = field(default_factory=Anthropometry)
    noise_std_m: float = 0.0
    seed: int = 0
    poor_form_obliquity_deg: float = 8.0
    depth_deg: float | None = None
    capture_rate_hz: float = 480.0

    def __post_init__(self):
        if self.kind not in EXERCISE_KINDS:
            raise ValueError(f"kind must be one of {EXERCISE_KINDS}")
        if self.form not in FORMS:
            raise ValueError("form must be good or poor")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.cadence_s <= 0:
            raise ValueError("cadence_s must be positive")
        if self.noise_std_m < 0:
            raise ValueError("noise_std_m must be non-negative")

    @property
    def effective_depth_deg(self) -> float:
        if self.depth_deg is not None:
            return self.depth_deg
        return LUNGE_DEPTH_DEG if self.kind == "lunge" else DEFAULT_DEPTH_DEG

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "form": self.form,
            "reps": self.reps,
            "cadence_s": self.cadence_s,
            "noise_std_m": self.noise_std_m,
            "seed": self.seed,
            "poor_form_obliquity_deg": self.poor_form_obliquity_deg,
            "depth_deg": self.effective_depth_deg,
            "capture_rate_hz": self.capture_rate_hz,
            "anthropometry": {"height_m": self.anthropometry.height_m},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExerciseSpec":
        anth = d.get("anthropometry", {})
        anthropometry = (
            Anthropometry.from_height(float(anth["height_m"]))
            if "height_m" in anth
            else Anthropometry()
        )
        return cls(
            kind=d.get("kind", "squat"),
            form=d.get("form", "good"),
            reps=int(d.get("reps", 5)),
            cadence_s=float(d.get("cadence_s", 3.0)),
            anthropometry=anthropometry,
            noise_std_m=float(d.get("noise_std_m", 0.0)),
            seed=int(d.get("seed", 0)),
            poor_form_obliquity_deg=float(d.get("poor_form_obliquity_deg", 8.0)),
            depth_deg=None if d.get("depth_deg") is None else float(d["depth_deg"]),
            capture_rate_hz=float(d.get("capture_rate_hz", 480.0)),
        )


@dataclass(slots=True)
class GroundTruth:
    """Per-frame commanded and modeled quantities, for tests and oracles."""

    t: np.ndarray
    rep_index: np.ndarray          # -1 outside reps
    completion: np.ndarray         # rep fraction in [0, 1), 0 outside reps
    knee_cmd_deg: np.ndarray
    hip_cmd_deg: np.ndarray
    obliquity_deg: np.ndarray
    knee_left_deg: np.ndarray      # actual modeled per-side flexion
    knee_right_deg: np.ndarray
    band_len_left_cm: np.ndarray   # sewn-marker separation
    band_len_right_cm: np.ndarray
    l0_cm: float
    l_rest_m: float

    def expected_force(self, cal: BandCalibration, side: str) -> np.ndarray:
        length = self.band_len_left_cm if side == "left" else self.band_len_right_cm
        f = cal.k_cal * (cal.l_cal_cm / self.l0_cm) * (length - self.l0_cm) + cal.f_i
        return np.maximum(0.0, f)


# ---------------------------------------------------------------------------
# pose solver
# ---------------------------------------------------------------------------


def _rotations(tau: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """World rotation of the torso: pitch tau about x, then roll alpha about y."""
    n = len(tau)
    ct, st = np.cos(tau), np.sin(tau)
    ca, sa = np.cos(alpha), np.sin(alpha)
    pitch = np.zeros((n, 3, 3))
    pitch[:, 0, 0] = 1.0
    pitch[:, 1, 1] = ct
    pitch[:, 1, 2] = st
    pitch[:, 2, 1] = -st
    pitch[:, 2, 2] = ct
    roll = np.zeros((n, 3, 3))
    roll[:, 0, 0] = ca
    roll[:, 0, 2] = -sa
    roll[:, 1, 1] = 1.0
    roll[:, 2, 0] = sa
    roll[:, 2, 2] = ca
    return roll @ pitch


def _leg_ik(ankle: np.ndarray, hip: np.ndarray, shank: float, thigh: float):
    """Knee position and knee flexion (deg) for a grounded two-link leg.

    The knee bends toward +y in the plane spanned by the ankle-hip line
    and the forward axis. Segment lengths are preserved exactly.
    """
    delta = hip - ankle
    d = np.linalg.norm(delta, axis=1)
    d = np.clip(d, abs(shank - thigh) + 1e-9, shank + thigh)
    u = delta / d[:, None]
    fwd = np.zeros_like(u)
    fwd[:, 1] = 1.0
    g = fwd - (np.sum(fwd * u, axis=1))[:, None] * u
    g_norm = np.linalg.norm(g, axis=1)
    g = g / np.where(g_norm == 0.0, 1.0, g_norm)[:, None]
    cos_psi = np.clip((shank**2 + d**2 - thigh**2) / (2.0 * shank * d), -1.0, 1.0)
    sin_psi = np.sqrt(np.maximum(0.0, 1.0 - cos_psi**2))
    knee = ankle + shank * (cos_psi[:, None] * u + sin_psi[:, None] * g)
    cos_interior = np.clip(
        (shank**2 + thigh**2 - d**2) / (2.0 * shank * thigh), -1.0, 1.0
    )
    flexion = 180.0 - np.degrees(np.arccos(cos_interior))
    return knee, flexion


def _arm_directions(kind: str, u: np.ndarray) -> tuple[np.ndarray, np.ndarray, bool]:
    """Unit arm directions (left, right) and whether they are world-frame."""
    n = len(u)
    env = np.sin(np.pi * u) ** 2
    if kind == "squat":
        d = np.zeros((n, 3))
        d[:, 2] = 1.0
        return d, d.copy(), True
    if kind in ("coronal", "sagittal"):
        e0, e1 = CORONAL_SWEEP if kind == "coronal" else SAGITTAL_SWEEP
        e = np.radians(e0 + (e1 - e0) * env)
        d_left = np.zeros((n, 3))
        d_right = np.zeros((n, 3))
        if kind == "coronal":
            d_left[:, 0] = np.cos(e)
            d_left[:, 2] = np.sin(e)
            d_right[:, 0] = -np.cos(e)
            d_right[:, 2] = np.sin(e)
        else:
            d_left[:, 1] = np.cos(e)
            d_left[:, 2] = np.sin(e)
            d_right = d_left.copy()
        return d_left, d_right, False
    if kind == "transverse":
        e = math.radians(TRANSVERSE_ELEVATION)
        psi = np.radians(TRANSVERSE_AZIMUTH) * env
        d_left = np.stack(
            [np.sin(psi) * math.cos(e), np.cos(psi) * math.cos(e),
             np.full(n, math.sin(e))], axis=1
        )
        d_right = d_left.copy()
        d_right[:, 0] = -d_right[:, 0]
        return d_left, d_right, False
    # lunge: arms extended forward at chest height
    e = math.radians(LUNGE_ELEVATION)
    d = np.zeros((n, 3))
    d[:, 1] = math.cos(e)
    d[:, 2] = math.sin(e)
    return d, d.copy(), False


@dataclass(slots=True)
class _Pose:
    """Marker positions plus the band-model intermediates."""

    pos: np.ndarray            # (n, 21, 3)
    knee_flexion_left: np.ndarray
    knee_flexion_right: np.ndarray
    knee_cmd: np.ndarray
    hip_cmd: np.ndarray
    obliquity_deg: np.ndarray
    path_left: np.ndarray      # band path lengths (m), before fit scaling
    path_right: np.ndarray
    wrist_left: np.ndarray
    wrist_right: np.ndarray
    anchor_left: np.ndarray
    anchor_right: np.ndarray


def _solve_pose(
    kind: str,
    anth: Anthropometry,
    u: np.ndarray,
    depth_deg: np.ndarray,
    obliquity_deg: np.ndarray,
) -> _Pose:
    """All marker positions for rep fractions u with per-sample commands."""
    n = len(u)
    env = np.sin(np.pi * np.clip(u, 0.0, 1.0)) ** 2
    if kind in ("squat", "lunge"):
        theta = np.radians(depth_deg) * env
    else:
        theta = np.zeros(n)
    # tilt envelope rises one order slower than the depth command so the
    # high-hip side leg stays reachable near the top of the rep
    alpha = np.radians(obliquity_deg) * env**2
    tau = TORSO_PITCH_RATIO * theta if kind == "squat" else np.zeros(n)

    shank, thigh = anth.shank_m, anth.thigh_m
    beta = SHANK_TILT_RATIO * theta
    h_c = anth.ankle_height_m + shank * np.cos(beta) + thigh * np.cos(theta - beta)
    y_c = shank * np.sin(beta) - thigh * np.sin(theta - beta)
    # a tilted pelvis sinks by its half-width projection (plus the inward
    # shift term) so the high-hip side leg never has to over-extend
    h_c = h_c - (anth.hip_width_m / 2.0) * (np.abs(np.sin(alpha)) + 1.0 - np.cos(alpha))
    center = np.stack([np.zeros(n), y_c, h_c], axis=1)

    rot = _rotations(tau, alpha)

    def torso_point(local: tuple[float, float, float]) -> np.ndarray:
        return center + rot @ np.asarray(local)

    half_hip = anth.hip_width_m / 2.0
    half_sh = anth.shoulder_width_m / 2.0
    tl = anth.torso_length_m

    hip_left = torso_point((half_hip, 0.0, 0.0))
    hip_right = torso_point((-half_hip, 0.0, 0.0))
    shoulder_left = torso_point((half_sh, 0.0, tl))
    shoulder_right = torso_point((-half_sh, 0.0, tl))
    side_left = torso_point((half_sh * 0.8, 0.02, tl * 0.40))
    side_right = torso_point((-half_sh * 0.8, 0.02, tl * 0.40))
    c4 = torso_point((0.0, -0.04, tl * 0.96))
    sternum = torso_point((0.0, 0.09, tl * 0.73))
    anchor_left = torso_point((ANCHOR_LATERAL, -ANCHOR_BACK, tl - ANCHOR_DROP))
    anchor_right = torso_point((-ANCHOR_LATERAL, -ANCHOR_BACK, tl - ANCHOR_DROP))

    ankle_left = np.tile([half_hip, 0.0, anth.ankle_height_m], (n, 1))
    ankle_right = np.tile([-half_hip, 0.0, anth.ankle_height_m], (n, 1))
    knee_left, flex_left = _leg_ik(ankle_left, hip_left, shank, thigh)
    knee_right, flex_right = _leg_ik(ankle_right, hip_right, shank, thigh)

    d_left, d_right, world_frame = _arm_directions(kind, u)
    if not world_frame:
        d_left = np.einsum("nij,nj->ni", rot, d_left)
        d_right = np.einsum("nij,nj->ni", rot, d_right)
    wrist_left = shoulder_left + anth.arm_length_m * d_left
    wrist_right = shoulder_right + anth.arm_length_m * d_right
    elbow_left = shoulder_left + 0.5 * anth.arm_length_m * d_left
    elbow_right = shoulder_right + 0.5 * anth.arm_length_m * d_right

    path_left = (
        np.linalg.norm(wrist_left - anchor_left, axis=1)
        + np.linalg.norm(anchor_left - knee_left, axis=1)
        + FRAME_ROUTING_M
    )
    path_right = (
        np.linalg.norm(wrist_right - anchor_right, axis=1)
        + np.linalg.norm(anchor_right - knee_right, axis=1)
        + FRAME_ROUTING_M
    )

    pos = np.full((n, kin.N_MARKERS + 1, 3), np.nan)
    pos[:, kin.RIGHT_ANKLE] = ankle_right
    pos[:, kin.LEFT_ANKLE] = ankle_left
    pos[:, kin.RIGHT_KNEE] = knee_right
    pos[:, kin.LEFT_KNEE] = knee_left
    pos[:, kin.RIGHT_HIP] = hip_right
    pos[:, kin.LEFT_HIP] = hip_left
    pos[:, kin.RIGHT_SIDE] = side_right
    pos[:, kin.LEFT_SIDE] = side_left
    pos[:, kin.RIGHT_SHOULDER] = shoulder_right
    pos[:, kin.LEFT_SHOULDER] = shoulder_left
    pos[:, kin.RIGHT_ELBOW] = elbow_right
    pos[:, kin.LEFT_ELBOW] = elbow_left
    pos[:, kin.RIGHT_WRIST] = wrist_right
    pos[:, kin.LEFT_WRIST] = wrist_left
    pos[:, kin.C4] = c4
    pos[:, kin.STERNUM] = sternum

    return _Pose(
        pos=pos,
        knee_flexion_left=flex_left,
        knee_flexion_right=flex_right,
        knee_cmd=np.degrees(theta),
        hip_cmd=np.degrees(tau + theta / 2.0),
        obliquity_deg=np.degrees(alpha),
        path_left=path_left,
        path_right=path_right,
        wrist_left=wrist_left,
        wrist_right=wrist_right,
        anchor_left=anchor_left,
        anchor_right=anchor_right,
    )


def _reference_path(kind: str, anth: Anthropometry) -> float:
    """Band path length in the exercise's start pose (u=0, zero tilt)."""
    pose = _solve_pose(kind, anth, np.zeros(1), np.zeros(1), np.zeros(1))
    return float(pose.path_left[0])


def rest_length_m(kind: str, anth: Anthropometry) -> float:
    """Unstretched band length after the pretension fit for this exercise."""
    return FIT_FACTORS[kind] * _reference_path(kind, anth)


def _band_markers(
    pose: _Pose, l_rest: float, slack: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Place the four sewn markers; returns separations (m) per side.

    Marker separation is the rest separation scaled by the band's relative
    stretch; pelvic tilt shifts the two sides' stretch in opposite
    directions through the strap routing (TILT_ROUTING_GAIN).
    """
    alpha = np.radians(pose.obliquity_deg)
    lam_left = pose.path_left / l_rest * (1.0 + TILT_ROUTING_GAIN * alpha)
    lam_right = pose.path_right / l_rest * (1.0 - TILT_ROUTING_GAIN * alpha)
    if slack is not None:
        lam_left = np.where(slack, 1.0, lam_left)
        lam_right = np.where(slack, 1.0, lam_right)
    sep_left = BAND_SEGMENT_REST_M * lam_left
    sep_right = BAND_SEGMENT_REST_M * lam_right

    for (wrist, anchor, sep, wrist_id, knee_id) in (
        (pose.wrist_left, pose.anchor_left, sep_left,
         kin.LEFT_BAND_WRIST, kin.LEFT_BAND_KNEE),
        (pose.wrist_right, pose.anchor_right, sep_right,
         kin.RIGHT_BAND_WRIST, kin.RIGHT_BAND_KNEE),
    ):
        seg = anchor - wrist
        length = np.linalg.norm(seg, axis=1)
        direction = seg / length[:, None]
        m_wrist = wrist + BAND_MARKER_OFFSET_M * direction
        m_knee = m_wrist + sep[:, None] * direction
        pose.pos[:, wrist_id] = m_wrist
        pose.pos[:, knee_id] = m_knee
    return sep_left, sep_right


# ---------------------------------------------------------------------------
# public synthesis API
# ---------------------------------------------------------------------------


def _assemble(
    spec_kind: str,
    anth: Anthropometry,
    rate_hz: float,
    u: np.ndarray,
    depth: np.ndarray,
    obliquity: np.ndarray,
    rep_index: np.ndarray,
    slack: np.ndarray | None,
    noise_std_m: float,
    seed: int,
    t0: float = 0.0,
    seq0: int = 0,
) -> tuple[FrameBlock, GroundTruth]:
    pose = _solve_pose(spec_kind, anth, u, depth, obliquity)
    l_rest = rest_length_m(spec_kind, anth)
    sep_left, sep_right = _band_markers(pose, l_rest, slack)
    n = len(u)
    t = t0 + np.arange(n) / rate_hz
    seq = seq0 + np.arange(n, dtype=np.int64)
    pos = pose.pos
    if noise_std_m > 0:
        rng = np.random.default_rng(seed)
        pos = pos + rng.normal(0.0, noise_std_m, size=pos.shape)
        pos[:, 0, :] = np.nan
    block = FrameBlock(
        t=t,
        seq=seq,
        pos=pos,
        valid=np.ones((n, kin.N_MARKERS + 1), dtype=bool),
    )
    block.valid[:, 0] = False
    truth = GroundTruth(
        t=t,
        rep_index=rep_index,
        completion=u,
        knee_cmd_deg=pose.knee_cmd,
        hip_cmd_deg=pose.hip_cmd,
        obliquity_deg=pose.obliquity_deg,
        knee_left_deg=pose.knee_flexion_left,
        knee_right_deg=pose.knee_flexion_right,
        band_len_left_cm=sep_left * 100.0,
        band_len_right_cm=sep_right * 100.0,
        l0_cm=BAND_SEGMENT_REST_M * 100.0,
        l_rest_m=l_rest,
    )
    return block, truth


def synthesize_block(spec: ExerciseSpec) -> tuple[FrameBlock, GroundTruth]:
    """Marker frames for spec.reps repetitions of one exercise."""
    frames_per_rep = max(2, int(round(spec.cadence_s * spec.capture_rate_hz)))
    n = frames_per_rep * spec.reps
    i = np.arange(n)
    u = (i % frames_per_rep) / frames_per_rep
    rep_index = i // frames_per_rep
    alpha_max = spec.poor_form_obliquity_deg if spec.form == "poor" else 0.0
    return _assemble(
        spec.kind,
        spec.anthropometry,
        spec.capture_rate_hz,
        u,
        np.full(n, spec.effective_depth_deg),
        np.full(n, alpha_max),
        rep_index,
        None,
        spec.noise_std_m,
        spec.seed,
    )


def synthesize(spec: ExerciseSpec) -> tuple[list[kin.MarkerFrame], GroundTruth]:
    """List-of-frames variant of synthesize_block."""
    block, truth = synthesize_block(spec)
    return block.to_frames(), truth


def expected_force_profile(
    spec: ExerciseSpec, cal: BandCalibration, points: int = 101
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Closed-form (completion %, left force, right force) over one rep."""
    u = np.linspace(0.0, 1.0, points)
    alpha_max = spec.poor_form_obliquity_deg if spec.form == "poor" else 0.0
    pose = _solve_pose(
        spec.kind,
        spec.anthropometry,
        u,
        np.full(points, spec.effective_depth_deg),
        np.full(points, alpha_max),
    )
    l_rest = rest_length_m(spec.kind, spec.anthropometry)
    sep_left, sep_right = _band_markers(pose, l_rest)
    l0_cm = BAND_SEGMENT_REST_M * 100.0
    scale = cal.k_cal * cal.l_cal_cm / l0_cm
    f_left = np.maximum(0.0, scale * (sep_left * 100.0 - l0_cm) + cal.f_i)
    f_right = np.maximum(0.0, scale * (sep_right * 100.0 - l0_cm) + cal.f_i)
    return u * 100.0, f_left, f_right


# ---------------------------------------------------------------------------
# full-session synthesis (the study timeline)
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class SessionSpec:
    """A full protocol session: who, the squat commands per rep, timing."""

    manifest: SessionManifest
    cadence_s: float = 3.0
    rest_s: float = 1.0
    preamble_s: float = 2.0
    noise_std_m: float = 0.0
    seed: int = 0
    anthropometry: Anthropometry = field(default_factory=Anthropometry)
    depth_deg: dict[str, list[float]] = field(default_factory=dict)
    obliquity_deg: dict[str, list[float]] = field(default_factory=dict)

    def __post_init__(self):
        for seg in self.manifest.segments:
            total = seg.planned_sets * seg.planned_reps
            self.depth_deg.setdefault(seg.label, [DEFAULT_DEPTH_DEG] * total)
            self.obliquity_deg.setdefault(seg.label, [0.0] * total)
            for name, arr in (("depth_deg", self.depth_deg[seg.label]),
                              ("obliquity_deg", self.obliquity_deg[seg.label])):
                if len(arr) != total:
                    raise ValueError(
                        f"{name}[{seg.label}] needs {total} per-rep values, "
                        f"got {len(arr)}"
                    )


@dataclass(slots=True)
class SessionData:
    """Everything the pipeline ingests for one session."""

    manifest: SessionManifest
    block: FrameBlock
    set_end_controls: list[tuple[float, int]]  # (time_s, seq)
    truth: GroundTruth


def synthesize_session(spec: SessionSpec) -> SessionData:
    rate = spec.manifest.capture_rate_hz
    frames_per_rep = max(2, int(round(spec.cadence_s * rate)))
    rest_frames = max(1, int(round(spec.rest_s * rate)))
    preamble_frames = max(1, int(round(spec.preamble_s * rate)))

    u_parts = [np.zeros(preamble_frames)]
    depth_parts = [np.zeros(preamble_frames)]
    ob_parts = [np.zeros(preamble_frames)]
    rep_parts = [np.full(preamble_frames, -1)]
    slack_parts = [np.ones(preamble_frames, dtype=bool)]
    set_end_after: list[int] = []  # cumulative frame counts where a set closes

    rep_counter = 0
    total = preamble_frames
    for seg in spec.manifest.segments:
        depths = spec.depth_deg[seg.label]
        obliquities = spec.obliquity_deg[seg.label]
        rep_in_segment = 0
        for _ in range(seg.planned_sets):
            for _ in range(seg.planned_reps):
                u_parts.append(np.arange(frames_per_rep) / frames_per_rep)
                depth_parts.append(np.full(frames_per_rep, depths[rep_in_segment]))
                ob_parts.append(np.full(frames_per_rep, obliquities[rep_in_segment]))
                rep_parts.append(np.full(frames_per_rep, rep_counter))
                slack_parts.append(np.zeros(frames_per_rep, dtype=bool))
                rep_in_segment += 1
                rep_counter += 1
                total += frames_per_rep
            # short standing rest closes the set
            u_parts.append(np.zeros(rest_frames))
            depth_parts.append(np.zeros(rest_frames))
            ob_parts.append(np.zeros(rest_frames))
            rep_parts.append(np.full(rest_frames, -1))
            slack_parts.append(np.zeros(rest_frames, dtype=bool))
            total += rest_frames
            set_end_after.append(total)

    block, truth = _assemble(
        "squat",
        spec.anthropometry,
        rate,
        np.concatenate(u_parts),
        np.concatenate(depth_parts),
        np.concatenate(ob_parts),
        np.concatenate(rep_parts),
        np.concatenate(slack_parts),
        spec.noise_std_m,
        spec.seed,
    )
    # each control row occupies its own seq slot right after its set's
    # final frame, so frame seq stays strictly increasing around it
    boundaries = np.asarray(set_end_after)
    block.seq = block.seq + np.searchsorted(boundaries, np.arange(len(block)), side="right")
    controls = [
        (float(block.t[b - 1] + 0.5 / rate), int(block.seq[b - 1]) + 1)
        for b in set_end_after
    ]
    if spec.manifest.rest_pose_s is None and spec.manifest.l0_left_cm is None:
        spec.manifest.rest_pose_s = spec.preamble_s
    return SessionData(
        manifest=spec.manifest,
        block=block,
        set_end_controls=controls,
        truth=truth,
    )


# ---------------------------------------------------------------------------
# planted-effect cohorts
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class PlantedEffect:
    """Linear training-phase improvement planted in selected arms.

    Pelvic obliquity ramps from start_deg to end_deg across the training
    reps for the listed groups; everyone else holds start_deg. The ramp
    does not persist into post/retention (full washout), matching the
    structure the study reports.
    """

    start_deg: float = 6.0
    end_deg: float = 1.0
    groups: tuple[str, ...] = ("resistance", "visual")
    rep_noise_deg: float = 1.0
    subject_noise_deg: float = 0.5
    depth_noise_deg: float = 1.5


def null_effect(level_deg: float = 6.0, rep_noise_deg: float = 1.0) -> PlantedEffect:
    return PlantedEffect(
        start_deg=level_deg,
        end_deg=level_deg,
        groups=(),
        rep_noise_deg=rep_noise_deg,
    )


def synthesize_cohort(
    n_per_group: int,
    effect: PlantedEffect,
    seed: int = 0,
    capture_rate_hz: float = 60.0,
    cadence_s: float = 1.5,
) -> list[SessionSpec]:
    """Session specs for a three-arm cohort (n subjects per arm).

    Returns the inputs; callers run synthesize_session/analyze on each.
    Lower capture rates keep cohorts cheap without affecting rep metrics.
    """
    if n_per_group < 1:
        raise ValueError("n_per_group must be >= 1")
    rng = np.random.default_rng(seed)
    specs: list[SessionSpec] = []
    from .protocol import GROUPS  # local import to avoid cycle at module load

    for group in GROUPS:
        improves = group in effect.groups
        for subject in range(n_per_group):
            manifest = SessionManifest(
                subject_id=f"{group}-{subject:02d}",
                group=group,
                capture_rate_hz=capture_rate_hz,
            )
            subj_level = effect.start_deg + rng.normal(0.0, effect.subject_noise_deg)
            depth: dict[str, list[float]] = {}
            obliquity: dict[str, list[float]] = {}
            for seg in manifest.segments:
                total = seg.planned_sets * seg.planned_reps
                depth[seg.label] = list(
                    DEFAULT_DEPTH_DEG + rng.normal(0.0, effect.depth_noise_deg, total)
                )
                if seg.label == "training" and improves and total > 1:
                    ramp = np.linspace(subj_level,
                                       subj_level - (effect.start_deg - effect.end_deg),
                                       total)
                else:
                    ramp = np.full(total, subj_level)
                values = ramp + rng.normal(0.0, effect.rep_noise_deg, total)
                obliquity[seg.label] = list(np.clip(values, 0.0, 30.0))
            specs.append(
                SessionSpec(
                    manifest=manifest,
                    cadence_s=cadence_s,
                    rest_s=0.6,
                    preamble_s=1.0,
                    noise_std_m=0.0,
                    seed=int(rng.integers(0, 2**31 - 1)),
                    depth_deg=depth,
                    obliquity_deg=obliquity,
                )
            )
    return specs


__all__ = [
    "EXERCISE_KINDS",
    "FORMS",
    "FIT_FACTORS",
    "Anthropometry",
    "ExerciseSpec",
    "GroundTruth",
    "SessionSpec",
    "SessionData",
    "PlantedEffect",
    "null_effect",
    "rest_length_m",
    "synthesize",
    "synthesize_block",
    "synthesize_session",
    "synthesize_cohort",
    "expected_force_profile",
    "replace",
]
