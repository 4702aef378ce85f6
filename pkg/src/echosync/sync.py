"""Offset application and the exhaustive candidate-offset search.

Offsets are signed milliseconds, positive when audio leads ultrasound.
Applying an offset crops the front of the leading signal, then trims
the longer tail so stream durations agree within half an ultrasound
frame period. The search scores every candidate offset by the mean
embedding distance over the realigned window pairs and predicts the
candidate with the smallest mean.
"""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data_io import AudioSignal, RawUltrasoundSequence, UtteranceRecord
from .dsp import round_half_up
from .errors import RangeError, UnsyncableError, ValidationError
from .sampling import ShortUtteranceWarning, extract_window_pairs


@dataclass(frozen=True)
class CandidateGrid:
    """Strictly increasing candidate offsets in milliseconds."""

    offsets: tuple

    def __init__(self, offsets):
        values = tuple(float(v) for v in offsets)
        if not values:
            raise ValidationError("candidate grid must be non-empty")
        ordered = tuple(sorted(values))
        if any(a == b for a, b in zip(ordered, ordered[1:])):
            raise ValidationError("candidate grid contains duplicate offsets")
        object.__setattr__(self, "offsets", ordered)

    def __len__(self):
        return len(self.offsets)

    def __iter__(self):
        return iter(self.offsets)


def build_grid(min_s: float, max_s: float, step_s: float) -> CandidateGrid:
    """Offsets min_s, min_s+step, ... up to the largest value <= max_s."""
    if step_s <= 0:
        raise ValidationError(f"grid step must be positive, got {step_s}")
    if min_s > max_s:
        raise ValidationError(f"grid range is empty: min {min_s} > max {max_s}")
    offsets = []
    k = 0
    # Tolerate float dust so an exact top-of-range point is included.
    while min_s + k * step_s <= max_s + step_s * 1e-9:
        offsets.append(round((min_s + k * step_s) * 1000.0, 6))
        k += 1
    return CandidateGrid(offsets)


# Candidate range used for cleft-palate therapy recordings.
CLEFT_GRID = build_grid(-1.75, 0.75, 0.045)

NAMED_GRIDS = {"cleft": CLEFT_GRID}


def _tail_align(ultra: RawUltrasoundSequence, audio: AudioSignal):
    """Trim tails so durations agree within half a frame period."""
    fps = ultra.params.frame_rate
    sr = audio.sample_rate
    n_frames = ultra.n_frames
    a_dur = len(audio.samples) / sr
    keep_frames = min(n_frames, round_half_up(a_dur * fps))
    if keep_frames < 1:
        raise RangeError("alignment leaves no ultrasound frames")
    frames = ultra.frames[:keep_frames]
    u_dur = keep_frames / fps
    keep_samples = len(audio.samples)
    if a_dur > u_dur:
        keep_samples = round_half_up(u_dur * sr)
    if keep_samples < 1:
        raise RangeError("alignment leaves no audio samples")
    return frames, audio.samples[:keep_samples]


def apply_offset(rec: UtteranceRecord, offset_ms: float) -> UtteranceRecord:
    """Realign a record by a signed millisecond offset.

    Positive: the first offset_ms of audio are dropped. Negative: the
    leading ultrasound is dropped, rounded to whole frames. Either way
    the longer tail is then trimmed. Metadata is unchanged.
    """
    u_dur = rec.ultrasound.n_frames / rec.ultrasound.params.frame_rate
    a_dur = len(rec.audio.samples) / rec.audio.sample_rate
    if abs(offset_ms) / 1000.0 >= min(u_dur, a_dur):
        raise RangeError(
            f"offset {offset_ms} ms exceeds the {min(u_dur, a_dur) * 1000:.1f} ms signal"
        )
    sr = rec.audio.sample_rate
    fps = rec.ultrasound.params.frame_rate
    frames = rec.ultrasound.frames
    samples = rec.audio.samples
    if offset_ms > 0:
        samples = samples[round_half_up(offset_ms / 1000.0 * sr) :]
    elif offset_ms < 0:
        frames = frames[round_half_up(-offset_ms / 1000.0 * fps) :]
    if len(frames) < 1 or len(samples) < 1:
        raise RangeError(f"offset {offset_ms} ms leaves an empty stream")
    ultra = RawUltrasoundSequence(params=rec.ultrasound.params, frames=frames.copy())
    frames, samples = _tail_align(ultra, AudioSignal(samples=samples, sample_rate=sr))
    return UtteranceRecord(
        id=rec.id,
        type_code=rec.type_code,
        prompt=rec.prompt,
        audio=AudioSignal(samples=samples.copy(), sample_rate=sr),
        ultrasound=RawUltrasoundSequence(params=rec.ultrasound.params, frames=frames.copy()),
        probe_view=rec.probe_view,
        timestamp=rec.timestamp,
    )


@dataclass
class SyncPrediction:
    """Per-candidate mean distances and the arg-min offset."""

    utterance_id: str
    offsets: tuple
    mean_distances: list = field(default_factory=list)
    windows_evaluated: list = field(default_factory=list)
    predicted_offset: float = 0.0

    def __post_init__(self):
        if len(self.mean_distances) != len(self.offsets):
            raise ValidationError("one mean distance per candidate required")
        if len(self.windows_evaluated) != len(self.offsets):
            raise ValidationError("one window count per candidate required")
        if self.predicted_offset not in self.offsets:
            raise ValidationError("predicted offset must be a grid candidate")
        finite = [m for m in self.mean_distances if math.isfinite(m)]
        if finite:
            at = self.offsets.index(self.predicted_offset)
            if self.mean_distances[at] > min(finite):
                raise ValidationError("predicted offset must have the minimal mean distance")


def _candidate_mean(rec, model, offset_ms, l, batch_size):
    try:
        shifted = apply_offset(rec, offset_ms)
    except RangeError:
        return math.inf, 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ShortUtteranceWarning)
        pairs = extract_window_pairs(shifted, l)
    if not pairs:
        return math.inf, 0
    w_u = np.stack([p.w_u for p in pairs])
    w_m = np.stack([p.w_m for p in pairs])
    distances = []
    for lo in range(0, len(pairs), batch_size):
        _, _, d = model.forward_batch(
            w_u[lo : lo + batch_size], w_m[lo : lo + batch_size], training=False
        )
        distances.append(d)
    return float(np.mean(np.concatenate(distances))), len(pairs)


def synchronise(
    rec: UtteranceRecord,
    model,
    grid: CandidateGrid,
    batch_size: int = 64,
    jobs: int = 1,
) -> SyncPrediction:
    """Score every candidate offset and select the arg-min.

    Candidates that leave no complete window score +infinity. Ties in
    mean distance resolve toward the smallest |offset|, then toward the
    earlier grid entry. All-infinite profiles raise UnsyncableError.
    """
    l = model.window_frames
    offsets = list(grid.offsets)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(
                pool.map(lambda off: _candidate_mean(rec, model, off, l, batch_size), offsets)
            )
    else:
        results = [_candidate_mean(rec, model, off, l, batch_size) for off in offsets]
    means = [r[0] for r in results]
    counts = [r[1] for r in results]
    if all(math.isinf(m) for m in means):
        raise UnsyncableError(
            f"utterance {rec.id!r}: no candidate offset leaves a complete window"
        )
    best = min(range(len(offsets)), key=lambda i: (means[i], abs(offsets[i]), i))
    return SyncPrediction(
        utterance_id=rec.id,
        offsets=tuple(offsets),
        mean_distances=means,
        windows_evaluated=counts,
        predicted_offset=offsets[best],
    )


def write_predictions(path, predictions: list[SyncPrediction]):
    """One JSON object per line; infinite means are stored as null."""
    with open(path, "w", encoding="utf-8") as fh:
        for pred in predictions:
            candidates = [
                {
                    "offset_ms": off,
                    "mean_distance": None if math.isinf(mean) else mean,
                    "windows": count,
                }
                for off, mean, count in zip(
                    pred.offsets, pred.mean_distances, pred.windows_evaluated
                )
            ]
            record = {
                "utterance_id": pred.utterance_id,
                "predicted_offset_ms": pred.predicted_offset,
                "candidates": candidates,
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def read_predictions(path) -> list[SyncPrediction]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            candidates = rec["candidates"]
            out.append(
                SyncPrediction(
                    utterance_id=rec["utterance_id"],
                    offsets=tuple(c["offset_ms"] for c in candidates),
                    mean_distances=[
                        math.inf if c["mean_distance"] is None else c["mean_distance"]
                        for c in candidates
                    ],
                    windows_evaluated=[c["windows"] for c in candidates],
                    predicted_offset=rec["predicted_offset_ms"],
                )
            )
    return out
