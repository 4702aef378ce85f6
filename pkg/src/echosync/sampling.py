"""Window extraction and balanced true/false self-supervision samples.

An utterance is cut into non-overlapping windows of `l` ultrasound
frames; each window is paired with the MFCC rows of its own audio
span (a true sample) and, within the same utterance, with the audio
of a different window (a false sample). False pairings form a
derangement so no sample is accidentally true.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .data_io import AudioSignal, UtteranceRecord
from .dsp import MfccConfig, mfcc, round_half_up, window_time
from .errors import ValidationError


class ShortUtteranceWarning(UserWarning):
    """Utterance has fewer frames than one window; it yields no pairs."""


@dataclass
class WindowPair:
    """One l-frame ultrasound window with the features of its audio span.

    `w_u` is (l, height, width) float32 scaled to [0, 1]; `w_m` is
    (4l, feature_dim) float32.
    """

    utterance_id: str
    index: int
    w_u: np.ndarray
    w_m: np.ndarray

    def __post_init__(self):
        if self.w_u.ndim != 3:
            raise ValidationError("w_u must be (frames, height, width)")
        if self.w_m.ndim != 2 or self.w_m.shape[0] != 4 * self.w_u.shape[0]:
            raise ValidationError(
                f"w_m must have 4*l = {4 * self.w_u.shape[0]} rows, got {self.w_m.shape}"
            )


@dataclass
class TrainingSample:
    """A (possibly mismatched) window pairing with its label.

    `label` 1 means `pair.w_m` is the audio of window `pair.index`
    itself; 0 means it was taken from window `audio_index` of the same
    utterance.
    """

    pair: WindowPair
    audio_index: int
    label: int

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValidationError(f"label must be 0 or 1, got {self.label}")
        if self.label == 1 and self.audio_index != self.pair.index:
            raise ValidationError("true samples must pair a window with its own audio")
        if self.label == 0 and self.audio_index == self.pair.index:
            raise ValidationError("false samples must not keep their own audio")


def extract_window_pairs(
    rec: UtteranceRecord, l: int = 5, mfcc_cfg: MfccConfig | None = None
) -> list[WindowPair]:
    """Cut a preprocessed utterance into floor(n/l) window pairs.

    Window i covers ultrasound frames [i*l, (i+1)*l) and the audio
    span of the same time interval; trailing remainder frames are
    discarded. Ultrasound intensities are scaled to [0, 1]. An
    utterance shorter than one window yields an empty list and a
    ShortUtteranceWarning.
    """
    if l < 1:
        raise ValidationError("l must be >= 1")
    fps = rec.ultrasound.params.frame_rate
    sr = rec.audio.sample_rate
    n_frames = rec.ultrasound.n_frames
    count = n_frames // l
    if count == 0:
        warnings.warn(
            f"utterance {rec.id!r} has {n_frames} frames, fewer than one {l}-frame window",
            ShortUtteranceWarning,
            stacklevel=2,
        )
        return []

    cfg = mfcc_cfg or MfccConfig.for_window(l, fps)
    t = window_time(l, fps)
    samples = rec.audio.samples
    pairs = []
    for i in range(count):
        start = round_half_up(i * t * sr)
        end = round_half_up((i + 1) * t * sr)
        span = samples[start:end]
        if len(span) < end - start:
            # Duration mismatch is bounded by half a frame period, so
            # zero-filling the tail is a sub-window correction.
            span = np.pad(span, (0, end - start - len(span)))
        w_m = mfcc(AudioSignal(samples=span, sample_rate=sr), cfg)
        if w_m.shape[0] != 4 * l:
            raise ValidationError(
                f"audio span of window {i} yields {w_m.shape[0]} feature rows, "
                f"expected {4 * l}; sample rate {sr} is too low for the window arithmetic"
            )
        w_u = rec.ultrasound.frames[i * l : (i + 1) * l].astype(np.float32) / 255.0
        pairs.append(
            WindowPair(
                utterance_id=rec.id, index=i, w_u=w_u, w_m=w_m.astype(np.float32)
            )
        )
    return pairs


def _derangement(k: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform random permutation of range(k) with no fixed point."""
    while True:
        perm = rng.permutation(k)
        if not np.any(perm == np.arange(k)):
            return perm


def make_selfsup_set(pairs: list[WindowPair], seed: int) -> list[TrainingSample]:
    """Balanced true/false training samples, deterministic per seed.

    One true sample per pair plus an equal number of false samples made
    by deranging audio windows within each utterance. Utterances with a
    single window contribute no false sample; balance is restored by
    dropping that many true samples uniformly at random.
    """
    by_utterance: dict[str, list[WindowPair]] = {}
    for p in pairs:
        by_utterance.setdefault(p.utterance_id, []).append(p)
    for group in by_utterance.values():
        group.sort(key=lambda p: p.index)
        indices = [p.index for p in group]
        if len(set(indices)) != len(indices):
            raise ValidationError(f"duplicate window index in utterance {group[0].utterance_id!r}")

    rng = np.random.default_rng(seed)
    true_samples: list[TrainingSample] = []
    false_samples: list[list[TrainingSample]] = []
    for uid in sorted(by_utterance):
        group = by_utterance[uid]
        k = len(group)
        for p in group:
            true_samples.append(TrainingSample(pair=p, audio_index=p.index, label=1))
        if k < 2:
            false_samples.append([])
            continue
        perm = _derangement(k, rng)
        falses = []
        for pos, p in enumerate(group):
            donor = group[perm[pos]]
            mismatched = WindowPair(
                utterance_id=uid, index=p.index, w_u=p.w_u, w_m=donor.w_m
            )
            falses.append(
                TrainingSample(pair=mismatched, audio_index=donor.index, label=0)
            )
        false_samples.append(falses)

    n_false = sum(len(f) for f in false_samples)
    surplus = len(true_samples) - n_false
    keep = np.ones(len(true_samples), dtype=bool)
    if surplus > 0:
        drop = rng.choice(len(true_samples), size=surplus, replace=False)
        keep[drop] = False

    out: list[TrainingSample] = []
    flat_false = [s for group in false_samples for s in group]
    true_kept = [s for s, k in zip(true_samples, keep) if k]
    # Interleave per utterance order: all kept trues then all falses,
    # both already sorted by (utterance_id, index).
    out.extend(true_kept)
    out.extend(flat_false)
    return out
