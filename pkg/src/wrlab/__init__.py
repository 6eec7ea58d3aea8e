"""Wearable-resistance band measurement and squat-training analysis."""

from .bandforce import BandForceSample, BandGeometry, band_force, band_force_vector
from .calibration import (
    BandCalibration,
    CalibrationSample,
    average_calibrations,
    default_calibration,
    fit_band_calibration,
)
from .feedback import FormThresholds, SetFeedback, evaluate_set
from .kinematics import (
    BiometricSample,
    MarkerFrame,
    biometrics,
    hip_flexion,
    interior_angle,
    knee_flexion,
    pelvic_obliquity,
)
from .protocol import Rep, SessionManifest, SessionRecord, segment_reps
from .simulator import Anthropometry, ExerciseSpec, synthesize
from .stats import compare_groups

__version__ = "0.1.0"

__all__ = [
    "BandCalibration",
    "BandForceSample",
    "BandGeometry",
    "BiometricSample",
    "CalibrationSample",
    "ExerciseSpec",
    "Anthropometry",
    "FormThresholds",
    "MarkerFrame",
    "Rep",
    "SessionManifest",
    "SessionRecord",
    "SetFeedback",
    "average_calibrations",
    "band_force",
    "band_force_vector",
    "biometrics",
    "compare_groups",
    "default_calibration",
    "evaluate_set",
    "fit_band_calibration",
    "hip_flexion",
    "interior_angle",
    "knee_flexion",
    "pelvic_obliquity",
    "segment_reps",
    "synthesize",
    "__version__",
]
