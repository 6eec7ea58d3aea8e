"""Resistance-band stiffness calibration from force-gauge pull data.

Each band is pulled through overlapping force intervals on a gauge rig;
the force-displacement samples are fitted with an ordinary least squares
line ``force = k_cal * displacement + f_i``. The fitted record also keeps
the displacement range it was trained on so downstream force evaluation
can flag extrapolation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import (
    InsufficientData,
    MismatchedReferenceLength,
    NegativeStiffness,
    ParseError,
    SchemaError,
)

SIDES = ("left", "right")

SAMPLE_CSV_HEADER = ["side", "interval", "cycle", "displacement_cm", "force_n"]
RECORD_HEADER = [
    "side",
    "k_cal_n_per_cm",
    "f_i_n",
    "l_cal_cm",
    "r_squared",
    "sample_count",
    "d_min_cm",
    "d_max_cm",
]


@dataclass(frozen=True, slots=True)
class CalibrationSample:
    """One force-gauge reading: displacement (cm) vs force (N) for a side."""

    side: str
    interval_index: int
    cycle_index: int
    displacement_cm: float
    force_n: float

    def __post_init__(self):
        if self.side not in SIDES:
            raise ValueError(f"side must be one of {SIDES}, got {self.side!r}")
        if not 1 <= self.interval_index <= 4:
            raise ValueError("interval_index must be in [1, 4]")
        if not 1 <= self.cycle_index <= 3:
            raise ValueError("cycle_index must be in [1, 3]")
        if self.displacement_cm < 0:
            raise ValueError("displacement_cm must be non-negative")
        if self.force_n < 0:
            raise ValueError("force_n must be non-negative")


@dataclass(frozen=True, slots=True)
class BandCalibration:
    """Fitted stiffness line for one band, or the left/right average.

    k_cal is N/cm over the calibrated displacement range [d_min_cm,
    d_max_cm]; l_cal_cm is the gauge-rig segment length the stiffness was
    measured over. Only the product k_cal * l_cal_cm matters downstream,
    which is why a stand-in l_cal is acceptable as long as it is used
    consistently.
    """

    side: str
    k_cal: float
    f_i: float
    l_cal_cm: float
    r_squared: float
    sample_count: int
    d_min_cm: float
    d_max_cm: float

    def __post_init__(self):
        if self.side not in SIDES + ("averaged",):
            raise ValueError(f"invalid side {self.side!r}")
        if not self.k_cal > 0:
            raise ValueError("k_cal must be positive")
        if self.f_i < 0:
            raise ValueError("f_i must be non-negative")
        if not self.l_cal_cm > 0:
            raise ValueError("l_cal_cm must be positive")
        if not 0.0 <= self.r_squared <= 1.0:
            raise ValueError("r_squared must be in [0, 1]")
        if self.d_min_cm > self.d_max_cm:
            raise ValueError("d_min_cm must not exceed d_max_cm")


def fit_band_calibration(
    samples: list[CalibrationSample],
    l_cal_cm: float,
    last_cycle_only: bool = False,
) -> BandCalibration:
    """OLS fit of force against displacement for a single band.

    All pretension cycles participate by default; ``last_cycle_only``
    restricts the fit to cycle 3.
    """
    if l_cal_cm <= 0:
        raise ValueError("l_cal_cm must be positive")
    if last_cycle_only:
        samples = [s for s in samples if s.cycle_index == 3]
    if len(samples) < 3:
        raise InsufficientData(f"need at least 3 samples, got {len(samples)}")
    sides = {s.side for s in samples}
    if len(sides) != 1:
        raise ValueError(f"samples mix sides {sorted(sides)}; fit one side at a time")

    d = np.array([s.displacement_cm for s in samples], dtype=float)
    f = np.array([s.force_n for s in samples], dtype=float)
    if np.ptp(d) == 0.0:
        raise InsufficientData("all displacements equal; slope is undetermined")
    if np.ptp(f) == 0.0:
        raise NegativeStiffness(
            "force does not vary with displacement; the band has no stiffness"
        )

    slope, intercept = np.polyfit(d, f, 1)
    if slope <= 0:
        raise NegativeStiffness(f"fitted slope {slope:.6g} N/cm is not positive")
    if intercept < 0:
        raise NegativeStiffness(
            f"fitted initial force {intercept:.6g} N is negative; "
            "bands carry no compressive preload, input looks corrupted"
        )

    residuals = f - (slope * d + intercept)
    ss_res = float(np.dot(residuals, residuals))
    ss_tot = float(np.dot(f - f.mean(), f - f.mean()))
    r_squared = 1.0 if ss_tot == 0.0 else max(0.0, min(1.0, 1.0 - ss_res / ss_tot))

    return BandCalibration(
        side=sides.pop(),
        k_cal=float(slope),
        f_i=float(intercept),
        l_cal_cm=float(l_cal_cm),
        r_squared=r_squared,
        sample_count=len(samples),
        d_min_cm=float(d.min()),
        d_max_cm=float(d.max()),
    )


def average_calibrations(a: BandCalibration, b: BandCalibration) -> BandCalibration:
    """Average a left and a right fit into the record used for both sides.

    Stiffness and initial force are arithmetic means; r_squared keeps the
    worse of the two fits; the calibrated displacement range is the
    intersection so the extrapolation flag stays conservative for both
    bands.
    """
    if {a.side, b.side} != {"left", "right"}:
        raise ValueError(f"need one left and one right fit, got {a.side}/{b.side}")
    if a.l_cal_cm != b.l_cal_cm:
        raise MismatchedReferenceLength(
            f"l_cal differs: {a.l_cal_cm} cm vs {b.l_cal_cm} cm"
        )
    d_min = max(a.d_min_cm, b.d_min_cm)
    d_max = min(a.d_max_cm, b.d_max_cm)
    if d_min > d_max:
        d_min = d_max = (d_min + d_max) / 2.0
    return BandCalibration(
        side="averaged",
        k_cal=(a.k_cal + b.k_cal) / 2.0,
        f_i=(a.f_i + b.f_i) / 2.0,
        l_cal_cm=a.l_cal_cm,
        r_squared=min(a.r_squared, b.r_squared),
        sample_count=a.sample_count + b.sample_count,
        d_min_cm=d_min,
        d_max_cm=d_max,
    )


def load_calibration_samples(path: str | Path) -> list[CalibrationSample]:
    """Read the calibration sample CSV (see SAMPLE_CSV_HEADER)."""
    path = Path(path)
    samples: list[CalibrationSample] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected header") from None
        if [h.strip() for h in header] != SAMPLE_CSV_HEADER:
            raise SchemaError(
                f"{path}: expected header {','.join(SAMPLE_CSV_HEADER)}, "
                f"got {','.join(header)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(SAMPLE_CSV_HEADER):
                raise ParseError(f"expected 5 fields, got {len(row)}", line=lineno)
            side, interval, cycle, disp, force = (c.strip() for c in row)
            try:
                sample = CalibrationSample(
                    side=side,
                    interval_index=int(interval),
                    cycle_index=int(cycle),
                    displacement_cm=float(disp),
                    force_n=float(force),
                )
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from exc
            samples.append(sample)
    return samples


def save_calibration_samples(samples: list[CalibrationSample], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SAMPLE_CSV_HEADER)
        for s in samples:
            writer.writerow(
                [s.side, s.interval_index, s.cycle_index,
                 repr(s.displacement_cm), repr(s.force_n)]
            )


def _format_value(x: float) -> str:
    # repr() round-trips doubles exactly through decimal text
    return repr(float(x))


def save_calibrations(cals: list[BandCalibration], path: str | Path) -> None:
    """Write calibration records, one per line, under RECORD_HEADER."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_HEADER)
        for c in cals:
            writer.writerow(
                [
                    c.side,
                    _format_value(c.k_cal),
                    _format_value(c.f_i),
                    _format_value(c.l_cal_cm),
                    _format_value(c.r_squared),
                    c.sample_count,
                    _format_value(c.d_min_cm),
                    _format_value(c.d_max_cm),
                ]
            )


def save_calibration(cal: BandCalibration, path: str | Path) -> None:
    save_calibrations([cal], path)


def load_calibrations(path: str | Path) -> list[BandCalibration]:
    path = Path(path)
    out: list[BandCalibration] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected header") from None
        if [h.strip() for h in header] != RECORD_HEADER:
            raise SchemaError(
                f"{path}: expected header {','.join(RECORD_HEADER)}, "
                f"got {','.join(header)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(RECORD_HEADER):
                raise ParseError(f"expected 8 fields, got {len(row)}", line=lineno)
            try:
                out.append(
                    BandCalibration(
                        side=row[0].strip(),
                        k_cal=float(row[1]),
                        f_i=float(row[2]),
                        l_cal_cm=float(row[3]),
                        r_squared=float(row[4]),
                        sample_count=int(row[5]),
                        d_min_cm=float(row[6]),
                        d_max_cm=float(row[7]),
                    )
                )
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from exc
    return out


def load_calibration(path: str | Path, side: str | None = None) -> BandCalibration:
    """Load one record; picks by side when the file holds several."""
    cals = load_calibrations(path)
    if not cals:
        raise SchemaError(f"{path}: no calibration records")
    if side is None:
        if len(cals) == 1:
            return cals[0]
        for c in cals:
            if c.side == "averaged":
                return c
        raise SchemaError(f"{path}: multiple records, specify a side")
    for c in cals:
        if c.side == side:
            return c
    raise SchemaError(f"{path}: no record for side {side!r}")


def default_calibration() -> BandCalibration:
    """The shipped stand-in calibration (averaged left/right gauge fits).

    l_cal is a 30 cm placeholder: the gauge-rig segment length was not
    recorded with the fits, and only k_cal * l_cal matters downstream.
    """
    path = Path(__file__).parent / "data" / "default_calibration.csv"
    return load_calibration(path, side="averaged")


def synthesize_line_samples(
    side: str,
    k: float,
    f0: float,
    displacements_cm: list[float],
    noise_n: list[float] | None = None,
) -> list[CalibrationSample]:
    """Samples on the line F = k*d + f0, optionally with additive noise.

    Interval/cycle indices are assigned round-robin; they do not affect
    the fit.
    """
    out = []
    for i, d in enumerate(displacements_cm):
        f = k * d + f0
        if noise_n is not None:
            f += noise_n[i]
        out.append(
            CalibrationSample(
                side=side,
                interval_index=(i % 4) + 1,
                cycle_index=(i % 3) + 1,
                displacement_cm=d,
                force_n=max(0.0, f),
            )
        )
    return out


__all__ = [
    "CalibrationSample",
    "BandCalibration",
    "fit_band_calibration",
    "average_calibrations",
    "load_calibration_samples",
    "save_calibration_samples",
    "save_calibration",
    "save_calibrations",
    "load_calibration",
    "load_calibrations",
    "default_calibration",
    "synthesize_line_samples",
    "replace",
]
