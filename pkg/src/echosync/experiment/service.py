"""HTTP service for participant sessions and experiment results.

Participant-facing payloads (session state, next stimulus, media) carry
playback data only: no side offsets, correct sides, provenance tags or
error magnitudes. The results endpoint is the experimenter surface.
"""

from __future__ import annotations

import os

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse, JSONResponse
from pydantic import BaseModel

from ..errors import (
    ConflictError,
    EchosyncError,
    LimitError,
    PreconditionError,
    SequenceError,
    ValidationError,
)
from .plan import MAX_PLAYS_PER_SIDE, PLAY_SPEEDS, Experiment
from .results import experiment_results
from .store import EventStore

_STATUS = (
    (LimitError, 409),
    (PreconditionError, 409),
    (ConflictError, 409),
    (SequenceError, 409),
    (ValidationError, 422),
)


def _status_for(exc: EchosyncError) -> int:
    for cls, status in _STATUS:
        if isinstance(exc, cls):
            return status
    return 400


class PlayBody(BaseModel):
    stimulus_id: str
    side: str
    speed: float


class JudgmentBody(BaseModel):
    stimulus_id: str
    choice: str


def create_app(
    experiment: Experiment,
    store: EventStore,
    media_root,
    utterance_types: dict | None = None,
) -> FastAPI:
    app = FastAPI(title="echosync experiment service")

    @app.exception_handler(EchosyncError)
    async def _echosync_error(request, exc: EchosyncError):
        return JSONResponse(
            status_code=_status_for(exc),
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    def _state(session_id: str):
        if session_id not in experiment.sessions:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return store.state(session_id)

    def _session_summary(session_id: str) -> dict:
        state = _state(session_id)
        return {
            "session_id": session_id,
            "experiment_id": experiment.experiment_id,
            "kind": experiment.kind,
            "total": len(state.stimulus_ids),
            "completed_count": state.cursor,
            "completed": state.completed,
            "choices": list(experiment.choices),
            "speeds": list(PLAY_SPEEDS),
            "max_plays_per_side": MAX_PLAYS_PER_SIDE,
        }

    @app.get("/session/{session_id}")
    def get_session(session_id: str):
        return _session_summary(session_id)

    @app.get("/session/{session_id}/next")
    def get_next(session_id: str):
        state = _state(session_id)
        if state.completed:
            return {"completed": True, "stimulus": None}
        stimulus_id = state.current_stimulus
        media = {
            side: {
                "manifest": f"/media/{stimulus_id}/{side}/manifest",
                "audio": f"/media/{stimulus_id}/{side}/audio",
                "frames": f"/media/{stimulus_id}/{side}/frames",
            }
            for side in ("A", "B")
        }
        return {
            "completed": False,
            "stimulus": {
                "stimulus_id": stimulus_id,
                "index": state.cursor,
                "total": len(state.stimulus_ids),
                "choices": list(experiment.choices),
                "speeds": list(PLAY_SPEEDS),
                "max_plays_per_side": MAX_PLAYS_PER_SIDE,
                "plays": state.play_counts(stimulus_id),
                "media": media,
            },
        }

    @app.post("/session/{session_id}/play")
    def post_play(session_id: str, body: PlayBody):
        _state(session_id)
        counts = store.record_play(session_id, body.stimulus_id, body.side, body.speed)
        return {"stimulus_id": body.stimulus_id, "plays": counts}

    @app.post("/session/{session_id}/judgment")
    def post_judgment(session_id: str, body: JudgmentBody):
        _state(session_id)
        store.record_judgment(session_id, body.stimulus_id, body.choice)
        return _session_summary(session_id)

    def _media_dir(stimulus_id: str, side: str) -> str:
        if stimulus_id not in experiment.stimuli:
            raise HTTPException(status_code=404, detail=f"unknown stimulus {stimulus_id!r}")
        if side not in ("A", "B"):
            raise HTTPException(status_code=404, detail="side must be A or B")
        return os.path.join(media_root, stimulus_id, side)

    @app.get("/media/{stimulus_id}/{side}/manifest")
    def get_manifest(stimulus_id: str, side: str):
        path = os.path.join(_media_dir(stimulus_id, side), "manifest.json")
        if not os.path.exists(path):
            raise HTTPException(status_code=404, detail="manifest not rendered")
        return FileResponse(path, media_type="application/json")

    @app.get("/media/{stimulus_id}/{side}/audio")
    def get_audio(stimulus_id: str, side: str):
        path = os.path.join(_media_dir(stimulus_id, side), "audio.wav")
        if not os.path.exists(path):
            raise HTTPException(status_code=404, detail="audio not rendered")
        return FileResponse(path, media_type="audio/wav")

    @app.get("/media/{stimulus_id}/{side}/frames/{n}")
    def get_frame(stimulus_id: str, side: str, n: int):
        if n < 0:
            raise HTTPException(status_code=404, detail="frame index out of range")
        path = os.path.join(_media_dir(stimulus_id, side), "frames", f"{n:04d}.png")
        if not os.path.exists(path):
            raise HTTPException(status_code=404, detail=f"frame {n} not rendered")
        return FileResponse(path, media_type="image/png")

    @app.get("/experiment/{experiment_id}/results")
    def get_results(experiment_id: str, allow_partial: bool = False):
        if experiment_id != experiment.experiment_id:
            raise HTTPException(status_code=404, detail=f"unknown experiment {experiment_id!r}")
        return experiment_results(
            experiment, store, utterance_types=utterance_types, allow_partial=allow_partial
        )

    return app
