"""Append-only judgment store with deterministic replay.

Every play and judgment is one JSON line appended to the log; judgments
are fsynced before they are acknowledged. Session state is never stored
directly: it is always the fold of the event log over the experiment
plan, so a process restart (or crash after the last complete line)
reconstructs exactly the state the rules had produced. A torn trailing
line without its newline is discarded as an unacknowledged write.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field

from ..errors import (
    ConflictError,
    FormatError,
    LimitError,
    PreconditionError,
    SequenceError,
    ValidationError,
)
from .plan import MAX_PLAYS_PER_SIDE, PLAY_SPEEDS, Experiment


@dataclass
class SessionState:
    participant_id: str
    stimulus_ids: list
    cursor: int = 0
    plays: dict = field(default_factory=dict)
    judgments: dict = field(default_factory=dict)

    @property
    def completed(self) -> bool:
        return self.cursor >= len(self.stimulus_ids)

    @property
    def current_stimulus(self) -> str | None:
        return None if self.completed else self.stimulus_ids[self.cursor]

    def play_counts(self, stimulus_id: str) -> dict:
        return dict(self.plays.get(stimulus_id, {"A": 0, "B": 0}))


class EventStore:
    """Single log file per experiment; thread-safe appends."""

    def __init__(self, path, experiment: Experiment):
        self.path = path
        self.experiment = experiment
        self._lock = threading.Lock()
        self._sessions: dict[str, SessionState] = {}
        self._seq = 0
        for sid, spec in experiment.sessions.items():
            self._sessions[sid] = SessionState(
                participant_id=spec.participant_id, stimulus_ids=list(spec.stimulus_ids)
            )
        self._replay_existing()
        self._fh = open(self.path, "a", encoding="utf-8")

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _replay_existing(self):
        if not os.path.exists(self.path):
            return
        with open(self.path, "rb") as fh:
            blob = fh.read()
        if not blob:
            return
        body, sep, tail = blob.rpartition(b"\n")
        if tail:
            # Bytes after the final newline are a torn, unacknowledged
            # write: truncate them so resumed appends start a clean line.
            with open(self.path, "r+b") as fh:
                fh.truncate(len(body) + len(sep))
        if not sep:
            return
        for lineno, raw in enumerate(body.split(b"\n"), start=1):
            if not raw:
                raise FormatError(f"{self.path}: blank line {lineno} inside the event log")
            try:
                event = json.loads(raw.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                raise FormatError(f"{self.path}: corrupt event at line {lineno}: {exc}") from exc
            self._apply(event)

    def _apply(self, event: dict):
        seq = event.get("seq")
        if seq != self._seq + 1:
            raise FormatError(f"event sequence jumped from {self._seq} to {seq}")
        self._seq = seq
        kind = event.get("type")
        if kind == "play":
            self._validate_play(event["session_id"], event["stimulus_id"], event["side"], event["speed"])
            state = self._sessions[event["session_id"]]
            state.plays.setdefault(event["stimulus_id"], {"A": 0, "B": 0})[event["side"]] += 1
        elif kind == "judgment":
            self._validate_judgment(event["session_id"], event["stimulus_id"], event["choice"])
            state = self._sessions[event["session_id"]]
            state.judgments[event["stimulus_id"]] = event["choice"]
            state.cursor += 1
        else:
            raise FormatError(f"unknown event type {kind!r}")

    def _session(self, session_id: str) -> SessionState:
        if session_id not in self._sessions:
            raise ValidationError(f"unknown session {session_id!r}")
        return self._sessions[session_id]

    def _validate_play(self, session_id, stimulus_id, side, speed):
        state = self._session(session_id)
        if state.completed:
            raise SequenceError(f"session {session_id!r} is complete")
        if stimulus_id != state.current_stimulus:
            raise SequenceError(
                f"stimulus {stimulus_id!r} is not the current stimulus "
                f"({state.current_stimulus!r})"
            )
        if side not in ("A", "B"):
            raise ValidationError(f"side must be A or B, got {side!r}")
        if speed not in PLAY_SPEEDS:
            raise ValidationError(f"speed must be one of {PLAY_SPEEDS}, got {speed}")
        counts = state.plays.get(stimulus_id, {"A": 0, "B": 0})
        if counts[side] >= MAX_PLAYS_PER_SIDE:
            raise LimitError(
                f"side {side} of {stimulus_id!r} already played {MAX_PLAYS_PER_SIDE} times"
            )

    def _validate_judgment(self, session_id, stimulus_id, choice):
        state = self._session(session_id)
        if stimulus_id in state.judgments:
            raise ConflictError(f"stimulus {stimulus_id!r} already judged in this session")
        if state.completed:
            raise SequenceError(f"session {session_id!r} is complete")
        if stimulus_id != state.current_stimulus:
            raise SequenceError(
                f"stimulus {stimulus_id!r} is not the current stimulus "
                f"({state.current_stimulus!r})"
            )
        if choice not in self.experiment.choices:
            raise ValidationError(
                f"choice must be one of {self.experiment.choices}, got {choice!r}"
            )
        counts = state.plays.get(stimulus_id, {"A": 0, "B": 0})
        unplayed = [s for s in ("A", "B") if counts[s] < 1]
        if unplayed:
            raise PreconditionError(
                f"side(s) {unplayed} of {stimulus_id!r} have not been played"
            )

    def _append(self, event: dict, durable: bool):
        line = json.dumps(event, sort_keys=True)
        self._fh.write(line + "\n")
        self._fh.flush()
        if durable:
            os.fsync(self._fh.fileno())

    def record_play(self, session_id: str, stimulus_id: str, side: str, speed: float) -> dict:
        """Validate, persist and apply a play event; returns play counts."""
        with self._lock:
            self._validate_play(session_id, stimulus_id, side, float(speed))
            event = {
                "seq": self._seq + 1,
                "type": "play",
                "session_id": session_id,
                "stimulus_id": stimulus_id,
                "side": side,
                "speed": float(speed),
                "timestamp": time.time(),
            }
            self._append(event, durable=False)
            self._seq += 1
            state = self._sessions[session_id]
            state.plays.setdefault(stimulus_id, {"A": 0, "B": 0})[side] += 1
            return state.play_counts(stimulus_id)

    def record_judgment(self, session_id: str, stimulus_id: str, choice: str) -> SessionState:
        """Validate, durably persist and apply a judgment; returns state."""
        with self._lock:
            self._validate_judgment(session_id, stimulus_id, choice)
            event = {
                "seq": self._seq + 1,
                "type": "judgment",
                "session_id": session_id,
                "stimulus_id": stimulus_id,
                "choice": choice,
                "timestamp": time.time(),
            }
            self._append(event, durable=True)
            self._seq += 1
            state = self._sessions[session_id]
            state.judgments[stimulus_id] = choice
            state.cursor += 1
            return state

    def state(self, session_id: str) -> SessionState:
        with self._lock:
            return self._session(session_id)

    def session_ids(self) -> list:
        return sorted(self._sessions)

    def all_complete(self) -> bool:
        return all(s.completed for s in self._sessions.values())

    def judged_events(self) -> list:
        """(participant_id, stimulus_id, choice) for every judgment."""
        out = []
        with self._lock:
            for session_id in sorted(self._sessions):
                state = self._sessions[session_id]
                for stimulus_id in state.stimulus_ids[: state.cursor]:
                    out.append(
                        (state.participant_id, stimulus_id, state.judgments[stimulus_id])
                    )
        return out
