"""Streaming session service: frames in, per-set feedback out.

Frame batches mirror the frame CSV schema as JSON rows. Set boundaries
are explicit set-end posts (the operator's "end set" button), after which
the buffered window runs through the same per-set pipeline as the batch
CLI, so streamed feedback replays byte-identically.
"""

from __future__ import annotations

import asyncio
import csv
import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse

from . import io as wio
from .errors import SchemaError
from .feedback import FormThresholds, SetFeedback, evaluate_set
from .kinematics import FrameBlock
from .pipeline import set_reps
from .protocol import Rep, SessionManifest


@dataclass(slots=True)
class _Session:
    session_id: str
    manifest: SessionManifest
    lock: threading.Lock = field(default_factory=threading.Lock)
    state: str = "created"
    last_seq: int = -1
    pending_blocks: list[FrameBlock] = field(default_factory=list)
    sets: list[list[Rep]] = field(default_factory=list)
    events: list[SetFeedback] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def progress(self) -> dict:
        completed = len(self.sets)
        planned = self.manifest.planned_total_sets()
        if completed < planned:
            label, k = self.manifest.segment_of_set(completed + 1)
        else:
            label, k = self.manifest.segments[-1].label, self.manifest.segments[-1].planned_sets
        return {
            "sets_completed": completed,
            "planned_total_sets": planned,
            "segment_label": label,
            "set_in_segment": k,
            "state": self.state,
        }


def _event_message(session: _Session, event: SetFeedback) -> dict:
    return {
        "set_index": event.set_index,
        "verdicts": dict(event.verdicts),
        "progress": session.progress(),
    }


def create_app(data_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="wrlab session service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"],
    )
    sessions: dict[str, _Session] = {}
    root = Path(data_dir) if data_dir is not None else None

    def get_session(session_id: str) -> _Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return session

    def persist_rows(session: _Session, rows: list[dict]) -> None:
        if root is None:
            return
        session_dir = root / session.session_id
        session_dir.mkdir(parents=True, exist_ok=True)
        frames_path = session_dir / "frames.csv"
        new_file = not frames_path.exists()
        with frames_path.open("a", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            if new_file:
                writer.writerow(wio.FRAME_CSV_HEADER)
            for row in rows:
                writer.writerow(
                    [repr(float(row["time_s"])), int(row["seq"]),
                     int(row["marker_id"]), repr(float(row["x_m"])),
                     repr(float(row["y_m"])), repr(float(row["z_m"])),
                     int(bool(row.get("valid", True)))]
                )

    def persist_event(session: _Session, control_seq: int, t_ctrl: float) -> None:
        if root is None:
            return
        session_dir = root / session.session_id
        session_dir.mkdir(parents=True, exist_ok=True)
        with (session_dir / "frames.csv").open("a", newline="", encoding="utf-8") as fh:
            csv.writer(fh).writerow([repr(t_ctrl), control_seq, wio.SET_END,
                                     "", "", "", ""])
        (session_dir / "feedback.jsonl").write_text(
            "".join(e.to_event_line() + "\n" for e in session.events),
            encoding="utf-8",
        )
        wio.save_manifest(session.manifest, session_dir / "manifest.json")

    @app.post("/sessions", status_code=201)
    def create_session(manifest: dict):
        try:
            parsed = SessionManifest.from_dict(manifest)
        except (ValueError, TypeError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        session = _Session(session_id=uuid.uuid4().hex[:12], manifest=parsed)
        sessions[session.session_id] = session
        return {"session_id": session.session_id, "state": session.state}

    @app.post("/sessions/{session_id}/frames")
    def post_frames(session_id: str, body: dict):
        session = get_session(session_id)
        rows = body.get("rows")
        if not isinstance(rows, list) or not rows:
            raise HTTPException(status_code=422, detail="body must carry a rows list")
        with session.lock:
            if session.state == "complete":
                raise HTTPException(status_code=409, detail="session is complete")
            seqs = []
            for row in rows:
                if not isinstance(row, dict):
                    raise HTTPException(status_code=422, detail="rows must be objects")
                if str(row.get("marker_id")) == wio.SET_END:
                    raise HTTPException(
                        status_code=422,
                        detail="control rows are not accepted here; post set-end",
                    )
                try:
                    seqs.append(int(row["seq"]))
                except (KeyError, TypeError, ValueError) as exc:
                    raise HTTPException(status_code=422, detail=f"bad row: {exc}") from exc
            if any(b < a for a, b in zip(seqs, seqs[1:])) or seqs[0] < session.last_seq:
                raise HTTPException(
                    status_code=409,
                    detail="out-of-order seq; batch discarded",
                )
            try:
                block = wio.frame_rows_to_block(rows)
            except SchemaError as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
            session.pending_blocks.append(block)
            session.last_seq = max(session.last_seq, seqs[-1])
            session.state = "ingesting"
            persist_rows(session, rows)
            return {"accepted": len(rows), "last_seq": session.last_seq}

    @app.post("/sessions/{session_id}/set-end")
    def set_end(session_id: str):
        session = get_session(session_id)
        with session.lock:
            if session.state == "complete":
                raise HTTPException(status_code=409, detail="session is complete")
            if not session.pending_blocks:
                raise HTTPException(status_code=409, detail="no frames in the open set")
            block = FrameBlock.merge(session.pending_blocks)
            session.pending_blocks = []
            reps = set_reps(block, session.manifest)
            session.sets.append(reps)
            set_index = len(session.sets)
            event = None
            if any(r.valid for r in reps):
                event = evaluate_set(
                    reps,
                    FormThresholds.from_manifest(session.manifest.thresholds),
                    set_index=set_index,
                )
                session.events.append(event)
            else:
                session.notes.append(f"set {set_index}: no valid reps, no feedback event")
            session.last_seq += 1  # the control row's seq slot
            if set_index >= session.manifest.planned_total_sets():
                session.state = "complete"
            else:
                session.state = "between_sets"
            persist_event(session, session.last_seq, float(block.t[-1]) if len(block) else 0.0)
            return {
                "set_index": set_index,
                "reps": len(reps),
                "valid_reps": sum(1 for r in reps if r.valid),
                "feedback": None if event is None else event.to_event_dict(),
                "progress": session.progress(),
            }

    @app.get("/sessions/{session_id}/feedback")
    def get_feedback(session_id: str):
        session = get_session(session_id)
        with session.lock:
            return {
                "session_id": session_id,
                "events": [e.to_event_dict() for e in session.events],
                "notes": list(session.notes),
            }

    @app.get("/sessions/{session_id}/feedback.jsonl", response_class=PlainTextResponse)
    def get_feedback_lines(session_id: str):
        session = get_session(session_id)
        with session.lock:
            return "".join(e.to_event_line() + "\n" for e in session.events)

    @app.get("/sessions/{session_id}/summary")
    def get_summary(session_id: str):
        session = get_session(session_id)
        with session.lock:
            return {
                "session_id": session_id,
                "subject_id": session.manifest.subject_id,
                "group": session.manifest.group,
                "state": session.state,
                "last_seq": session.last_seq,
                "sets": [
                    {"set_index": i + 1,
                     "segment": session.manifest.segment_of_set(i + 1)[0],
                     "reps": len(reps),
                     "valid_reps": sum(1 for r in reps if r.valid)}
                    for i, reps in enumerate(session.sets)
                ],
                "progress": session.progress(),
                "feedback_training_only": session.manifest.feedback_training_only,
            }

    @app.websocket("/sessions/{session_id}/stream")
    async def stream(websocket: WebSocket, session_id: str):
        await websocket.accept()
        session = sessions.get(session_id)
        if session is None:
            await websocket.send_text(json.dumps({"error": "unknown session"}))
            await websocket.close(code=4004)
            return
        sent = 0
        try:
            while True:
                with session.lock:
                    events = session.events[sent:]
                    state = session.state
                for event in events:
                    await websocket.send_text(
                        json.dumps(_event_message(session, event), sort_keys=True)
                    )
                    sent += 1
                if state == "complete" and sent == len(session.events):
                    await websocket.send_text(
                        json.dumps({"complete": True, "progress": session.progress()},
                                   sort_keys=True)
                    )
                    break
                await asyncio.sleep(0.02)
        except WebSocketDisconnect:
            return
        await websocket.close()

    return app


__all__ = ["create_app"]
