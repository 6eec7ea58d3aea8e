"""Command-line workflows: calibrate, simulate, analyze, stats, serve.

Exit codes: 1 usage, 2 unreadable/malformed input, 3 domain error
(well-formed input the operation rejects). Errors go to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import io as wio
from .calibration import (
    average_calibrations,
    fit_band_calibration,
    load_calibration,
    load_calibration_samples,
    save_calibrations,
)
from .errors import DomainError, ParseError, SchemaError, WrlabError
from .pipeline import analyze_session_dir, write_session_report
from .protocol import REP_METRICS, SessionManifest
from .simulator import (
    ExerciseSpec,
    SessionSpec,
    synthesize_block,
    synthesize_session,
)
from .stats import compare_groups


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise _UsageError(message)


def _cmd_calibrate(args) -> int:
    samples = load_calibration_samples(args.samples)
    fits = []
    for side in ("left", "right"):
        side_samples = [s for s in samples if s.side == side]
        if side_samples:
            fits.append(
                fit_band_calibration(side_samples, args.lcal,
                                     last_cycle_only=args.last_cycle_only)
            )
    if not fits:
        raise SchemaError(f"{args.samples}: no calibration samples found")
    if len(fits) == 2:
        fits.append(average_calibrations(fits[0], fits[1]))
    save_calibrations(fits, args.out)
    for fit in fits:
        print(
            f"{fit.side}: k_cal={fit.k_cal:.6g} N/cm  f_i={fit.f_i:.6g} N  "
            f"r^2={fit.r_squared:.6f}  n={fit.sample_count}  "
            f"d=[{fit.d_min_cm:.3g}, {fit.d_max_cm:.3g}] cm"
        )
    return 0


def _cmd_simulate(args) -> int:
    try:
        job = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{args.spec}: {exc}") from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if "session" in job:
        body = job["session"]
        try:
            manifest = SessionManifest.from_dict(body["manifest"])
        except KeyError as exc:
            raise SchemaError(f"{args.spec}: session job needs a manifest") from exc
        except ValueError as exc:
            raise SchemaError(f"{args.spec}: {exc}") from exc
        spec = SessionSpec(
            manifest=manifest,
            cadence_s=float(body.get("cadence_s", 3.0)),
            rest_s=float(body.get("rest_s", 1.0)),
            preamble_s=float(body.get("preamble_s", 2.0)),
            noise_std_m=float(body.get("noise_std_m", 0.0)),
            seed=int(body.get("seed", 0)),
            depth_deg={k: list(map(float, v)) for k, v in body.get("depth_deg", {}).items()},
            obliquity_deg={k: list(map(float, v)) for k, v in body.get("obliquity_deg", {}).items()},
        )
        data = synthesize_session(spec)
        wio.write_frames_csv(out / "frames.csv", data.block, data.set_end_controls)
        wio.save_manifest(data.manifest, out / "manifest.json")
        wio.write_ground_truth_csv(out / "groundtruth.csv", data.truth)
        print(f"session: {len(data.block)} frames, "
              f"{len(data.set_end_controls)} sets -> {out}")
    elif "exercise" in job:
        spec = ExerciseSpec.from_dict(job["exercise"])
        block, truth = synthesize_block(spec)
        wio.write_frames_csv(out / "frames.csv", block)
        wio.write_ground_truth_csv(out / "groundtruth.csv", truth)
        print(f"{spec.kind}/{spec.form}: {len(block)} frames -> {out}")
    else:
        raise SchemaError(f"{args.spec}: job needs an 'exercise' or 'session' object")
    return 0


def _cmd_analyze(args) -> int:
    cal = load_calibration(args.calibration)
    result = analyze_session_dir(args.session, cal)
    write_session_report(result, args.report)
    record = result.record
    counts = ", ".join(
        f"{seg.label}: {len(seg.sets)} sets x {[len(s) for s in seg.sets]}"
        for seg in record.segments
    )
    print(f"subject {record.subject_id} ({record.group}): {counts}")
    if result.deviations:
        print(f"deviations: {len(result.deviations)} (see report.json)")
    print(f"report -> {args.report}")
    return 0


def _cmd_stats(args) -> int:
    cohort_dir = Path(args.cohort)
    reports = sorted(cohort_dir.glob("*/report.json"))
    if not reports:
        raise SchemaError(f"{cohort_dir}: no */report.json files found")
    deltas: dict[str, dict[str, list[float]]] = {}
    for path in reports:
        try:
            report = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from exc
        group = report.get("group")
        tse = report.get("training_start_end")
        if group is None or tse is None:
            continue
        for metric, value in tse["delta"].items():
            deltas.setdefault(metric, {}).setdefault(group, []).append(float(value))
    if not deltas:
        raise DomainError(f"{cohort_dir}: no reports carry training deltas")
    out = {}
    for metric in (args.metric or sorted(deltas)):
        if metric not in deltas:
            raise DomainError(f"metric {metric!r} not present in the cohort reports")
        report = compare_groups(deltas[metric], alpha=args.alpha)
        out[metric] = report.to_dict()
        flags = [k for k, v in report.significant_pairs.items() if v]
        print(f"{metric}: path={report.path} significant={flags or 'none'}")
    Path(args.report).write_text(json.dumps(out, indent=2, sort_keys=True) + "\n",
                                 encoding="utf-8")
    print(f"report -> {args.report}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    port = args.port if args.port is not None else int(os.environ.get("WRLAB_PORT", "8000"))
    uvicorn.run(create_app(args.data_dir), host=args.host, port=port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wrlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="fit band stiffness from gauge samples")
    p.add_argument("--samples", required=True, help="calibration sample CSV")
    p.add_argument("--lcal", required=True, type=float, help="gauge segment length (cm)")
    p.add_argument("--out", required=True, help="output calibration record file")
    p.add_argument("--last-cycle-only", action="store_true",
                   help="fit only the final pretension cycle")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("simulate", help="synthesize marker data from a job spec")
    p.add_argument("--spec", required=True, help="JSON job (exercise or session)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("analyze", help="batch-analyze a session directory")
    p.add_argument("--session", required=True,
                   help="directory with manifest.json and frames.csv")
    p.add_argument("--calibration", required=True, help="calibration record file")
    p.add_argument("--report", required=True, help="output report directory")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("stats", help="group comparisons over analyzed cohort reports")
    p.add_argument("--cohort", required=True,
                   help="directory of per-subject report directories")
    p.add_argument("--report", required=True, help="output JSON file")
    p.add_argument("--metric", action="append", choices=REP_METRICS,
                   help="restrict to a metric (repeatable)")
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("serve", help="run the streaming session service")
    p.add_argument("--port", type=int, default=None,
                   help="port (default WRLAB_PORT env or 8000)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--data-dir", default=None,
                   help="persist session files under this directory")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except (ParseError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: cannot read {exc.filename}", file=sys.stderr)
        return 2
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except WrlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
