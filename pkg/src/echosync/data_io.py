"""Reading and writing the per-utterance file set.

Each utterance is stored as four files sharing a basename: raw
ultrasound (.ult), its acquisition metadata (.param), the audio track
(.wav) and the prompt text (.txt). The canonical layouts:

* .param — UTF-8 text, one ``Key=Value`` per line, LF endings. Required
  keys: FramesPerSec, NumVectors, PixPerVector, FieldOfView,
  SyncOffsetMs. Optional: FirstFrameTimeSecs. Unknown keys are kept in
  ``extras`` and round-trip unchanged; a small alias table maps common
  vendor spellings onto the canonical names.
* .ult — unsigned 8-bit echo intensities, frames stored consecutively,
  each frame row-major with the scan line as the major axis.
* .wav — PCM, 16-bit signed little-endian, mono.
* .txt — first line the prompt, optional second line an ISO-8601
  recording timestamp.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    EmptyDataError,
    FormatError,
    TruncationError,
    ValidationError,
)

# Utterance type codes: letters follow the prompt taxonomy (words,
# non-words, sentence, articulatory, non-speech, conversation); the two
# word forms cover read and spontaneous adult material.
TYPE_CODES = ("A", "B", "C", "D", "E", "F", "read", "spontaneous")
TYPE_NAMES = {
    "A": "words",
    "B": "non-words",
    "C": "sentence",
    "D": "articulatory",
    "E": "non-speech",
    "F": "conversation",
    "read": "read",
    "spontaneous": "spontaneous",
}

PROBE_VIEWS = ("midsagittal", "coronal")

_REQUIRED_KEYS = ("FramesPerSec", "NumVectors", "PixPerVector", "FieldOfView", "SyncOffsetMs")
_OPTIONAL_KEYS = ("FirstFrameTimeSecs",)

# Vendor spellings seen in the wild -> canonical key.
_KEY_ALIASES = {
    "framerate": "FramesPerSec",
    "fps": "FramesPerSec",
    "scanlines": "NumVectors",
    "echoreturns": "PixPerVector",
    "fov": "FieldOfView",
    "syncoffset": "SyncOffsetMs",
    "timeinsecsoffirstframe": "FirstFrameTimeSecs",
    "firstframetime": "FirstFrameTimeSecs",
}

# Keys write_utterance adds so a record survives a round trip; they ride
# in the .param extras map rather than widening the required set.
_TYPE_KEY = "TypeCode"
_VIEW_KEY = "ProbeView"


@dataclass
class UltrasoundParams:
    """Acquisition metadata accompanying a raw ultrasound sequence."""

    frame_rate: float
    scan_lines: int
    echo_returns: int
    field_of_view: float
    hardware_offset_ms: float  # signed; positive = audio leads
    first_frame_time: float | None = None
    extras: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.frame_rate <= 0:
            raise ValidationError(f"frame_rate must be positive, got {self.frame_rate}")
        if self.scan_lines < 1 or self.echo_returns < 1:
            raise ValidationError("scan_lines and echo_returns must be >= 1")
        if not 0 < self.field_of_view <= 180:
            raise ValidationError(f"field_of_view must be in (0, 180], got {self.field_of_view}")

    @property
    def frame_size(self) -> int:
        return self.scan_lines * self.echo_returns


@dataclass
class RawUltrasoundSequence:
    """A stack of raw B-mode frames (scan lines x echo returns, uint8)."""

    params: UltrasoundParams
    frames: np.ndarray  # (n_frames, scan_lines, echo_returns)

    def __post_init__(self):
        f = np.asarray(self.frames)
        if f.ndim != 3 or f.shape[1:] != (self.params.scan_lines, self.params.echo_returns):
            raise ValidationError(
                f"frames shape {f.shape} does not match params "
                f"{self.params.scan_lines}x{self.params.echo_returns}"
            )
        self.frames = f.astype(np.uint8, copy=False)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def duration(self) -> float:
        return self.n_frames / self.params.frame_rate


@dataclass
class AudioSignal:
    """Mono audio, amplitudes in [-1, 1]."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValidationError(f"sample_rate must be positive, got {self.sample_rate}")
        self.samples = np.asarray(self.samples, dtype=np.float64)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass
class UtteranceRecord:
    id: str
    type_code: str
    prompt: str
    audio: AudioSignal
    ultrasound: RawUltrasoundSequence
    probe_view: str = "midsagittal"
    timestamp: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValidationError("utterance id must be non-empty")
        if "/" in self.id or "\\" in self.id:
            raise ValidationError(f"utterance id {self.id!r} contains a path separator")
        if self.type_code not in TYPE_CODES:
            raise ValidationError(f"unknown type code {self.type_code!r}")
        if self.probe_view not in PROBE_VIEWS:
            raise ValidationError(f"unknown probe view {self.probe_view!r}")


def _format_number(x: float) -> str:
    if float(x) == int(x):
        return str(int(x))
    return repr(float(x))


def parse_param(text: str) -> UltrasoundParams:
    """Parse .param key=value text into UltrasoundParams.

    Unknown keys land in ``extras``; missing required keys and
    unparsable numbers raise FormatError.
    """
    values: dict[str, float] = {}
    extras: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"line {lineno}: expected Key=Value, got {line!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        canonical = key if key in _REQUIRED_KEYS + _OPTIONAL_KEYS else _KEY_ALIASES.get(key.lower())
        if canonical is None:
            extras[key] = value
            continue
        try:
            values[canonical] = float(value)
        except ValueError as e:
            raise FormatError(f"line {lineno}: cannot parse number for {key}: {value!r}") from e
    for key in _REQUIRED_KEYS:
        if key not in values:
            raise FormatError(f"{key} missing")
    return UltrasoundParams(
        frame_rate=values["FramesPerSec"],
        scan_lines=int(values["NumVectors"]),
        echo_returns=int(values["PixPerVector"]),
        field_of_view=values["FieldOfView"],
        hardware_offset_ms=values["SyncOffsetMs"],
        first_frame_time=values.get("FirstFrameTimeSecs"),
        extras=extras,
    )


def write_param(params: UltrasoundParams) -> str:
    lines = [
        f"FramesPerSec={_format_number(params.frame_rate)}",
        f"NumVectors={params.scan_lines}",
        f"PixPerVector={params.echo_returns}",
        f"FieldOfView={_format_number(params.field_of_view)}",
        f"SyncOffsetMs={_format_number(params.hardware_offset_ms)}",
    ]
    if params.first_frame_time is not None:
        lines.append(f"FirstFrameTimeSecs={_format_number(params.first_frame_time)}")
    for key, value in params.extras.items():
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"


def parse_ult(data: bytes, params: UltrasoundParams) -> RawUltrasoundSequence:
    """Decode a .ult byte buffer into frames using the params geometry."""
    frame_size = params.frame_size
    remainder = len(data) % frame_size
    if remainder:
        raise TruncationError(
            f".ult length {len(data)} is not divisible by frame size {frame_size} "
            f"(remainder {remainder})"
        )
    n_frames = len(data) // frame_size
    if n_frames == 0:
        raise EmptyDataError(".ult contains zero frames")
    frames = np.frombuffer(data, dtype=np.uint8).reshape(
        n_frames, params.scan_lines, params.echo_returns
    )
    return RawUltrasoundSequence(params=params, frames=frames.copy())


def write_ult(seq: RawUltrasoundSequence) -> bytes:
    return np.ascontiguousarray(seq.frames, dtype=np.uint8).tobytes()


def read_wav(path) -> AudioSignal:
    with wave.open(str(path), "rb") as wf:
        if wf.getnchannels() != 1:
            raise FormatError(f"{path}: expected mono audio, got {wf.getnchannels()} channels")
        if wf.getsampwidth() != 2:
            raise FormatError(f"{path}: expected 16-bit PCM, got {8 * wf.getsampwidth()}-bit")
        rate = wf.getframerate()
        raw = wf.readframes(wf.getnframes())
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32767.0
    return AudioSignal(samples=samples, sample_rate=float(rate))


def write_wav(path, sig: AudioSignal) -> None:
    # Scale 32767 both ways keeps quantised signals sample-exact across a
    # write/read/write cycle.
    quantised = np.clip(np.round(sig.samples * 32767.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(int(round(sig.sample_rate)))
        wf.writeframes(quantised.tobytes())


def write_utterance(rec: UtteranceRecord, directory) -> dict[str, Path]:
    """Write the four-file set for `rec` into `directory`.

    Returns the paths keyed by extension. Re-loading the files
    reproduces the record (bit-exact .ult, sample-exact .wav provided
    the samples are already on the 16-bit grid).
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    base = directory / rec.id

    params = rec.ultrasound.params
    extras = dict(params.extras)
    extras[_TYPE_KEY] = rec.type_code
    extras[_VIEW_KEY] = rec.probe_view
    stamped = UltrasoundParams(
        frame_rate=params.frame_rate,
        scan_lines=params.scan_lines,
        echo_returns=params.echo_returns,
        field_of_view=params.field_of_view,
        hardware_offset_ms=params.hardware_offset_ms,
        first_frame_time=params.first_frame_time,
        extras=extras,
    )

    paths = {
        "param": base.with_suffix(".param"),
        "ult": base.with_suffix(".ult"),
        "wav": base.with_suffix(".wav"),
        "txt": base.with_suffix(".txt"),
    }
    paths["param"].write_text(write_param(stamped), encoding="utf-8", newline="\n")
    paths["ult"].write_bytes(write_ult(rec.ultrasound))
    write_wav(paths["wav"], rec.audio)
    prompt_text = rec.prompt + "\n"
    if rec.timestamp is not None:
        prompt_text += rec.timestamp + "\n"
    paths["txt"].write_text(prompt_text, encoding="utf-8", newline="\n")
    return paths


def load_utterance(directory, utterance_id: str) -> UtteranceRecord:
    """Load the four-file set named `utterance_id` from `directory`."""
    base = Path(directory) / utterance_id
    param_path = base.with_suffix(".param")
    if not param_path.exists():
        raise FormatError(f"missing {param_path}")
    params = parse_param(param_path.read_text(encoding="utf-8"))

    type_code = params.extras.pop(_TYPE_KEY, None)
    probe_view = params.extras.pop(_VIEW_KEY, "midsagittal")
    if type_code is None:
        # Fall back on the trailing type letter in the utterance name.
        tail = utterance_id[-1:]
        type_code = tail if tail in TYPE_CODES else "A"

    ultrasound = parse_ult(base.with_suffix(".ult").read_bytes(), params)
    audio = read_wav(base.with_suffix(".wav"))

    prompt = ""
    timestamp = None
    txt_path = base.with_suffix(".txt")
    if txt_path.exists():
        lines = txt_path.read_text(encoding="utf-8").splitlines()
        prompt = lines[0] if lines else ""
        if len(lines) > 1 and lines[1].strip():
            timestamp = lines[1]

    return UtteranceRecord(
        id=utterance_id,
        type_code=type_code,
        prompt=prompt,
        audio=audio,
        ultrasound=ultrasound,
        probe_view=probe_view,
        timestamp=timestamp,
    )


def list_utterance_ids(directory) -> list[str]:
    """Sorted ids of all complete utterance file sets in `directory`."""
    directory = Path(directory)
    ids = []
    for param_path in sorted(directory.glob("*.param")):
        base = param_path.with_suffix("")
        if base.with_suffix(".ult").exists() and base.with_suffix(".wav").exists():
            ids.append(base.name)
    return ids
