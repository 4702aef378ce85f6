"""Stimulus media rendering: frame images, audio and timing manifest.

Each stimulus side becomes a directory of fan-transformed PNG frames,
a 16-bit WAV, and a manifest carrying only playback data (frame count,
frame rate, duration). Offsets and correct sides never appear in the
rendered tree, so serving it to participants leaks nothing.
"""

from __future__ import annotations

import json
import os

from PIL import Image

from ..data_io import UtteranceRecord, write_wav
from ..errors import ValidationError
from ..fan import fan_transform
from ..sync import apply_offset
from .plan import Experiment, StimulusPair

DEFAULT_FRAME_HEIGHT = 240
DEFAULT_FRAME_WIDTH = 320


def render_stimulus_media(
    stimulus: StimulusPair,
    record: UtteranceRecord,
    out_dir,
    frame_height: int = DEFAULT_FRAME_HEIGHT,
    frame_width: int = DEFAULT_FRAME_WIDTH,
) -> dict:
    """Render both sides of one stimulus; returns side -> manifest."""
    if record.id != stimulus.utterance_id:
        raise ValidationError(
            f"stimulus {stimulus.stimulus_id!r} expects utterance "
            f"{stimulus.utterance_id!r}, got {record.id!r}"
        )
    manifests = {}
    for side in ("A", "B"):
        shifted = apply_offset(record, stimulus.side_offset(side))
        side_dir = os.path.join(out_dir, stimulus.stimulus_id, side)
        frames_dir = os.path.join(side_dir, "frames")
        os.makedirs(frames_dir, exist_ok=True)
        params = shifted.ultrasound.params
        for i, frame in enumerate(shifted.ultrasound.frames):
            fan = fan_transform(frame, params, frame_height, frame_width)
            Image.fromarray(fan.to_uint8()).save(
                os.path.join(frames_dir, f"{i:04d}.png"), format="PNG"
            )
        write_wav(os.path.join(side_dir, "audio.wav"), shifted.audio)
        manifest = {
            "stimulus_id": stimulus.stimulus_id,
            "side": side,
            "frame_count": shifted.ultrasound.n_frames,
            "frames_per_second": params.frame_rate,
            "frame_height": frame_height,
            "frame_width": frame_width,
            "sample_rate": shifted.audio.sample_rate,
            "duration_seconds": shifted.ultrasound.n_frames / params.frame_rate,
        }
        with open(os.path.join(side_dir, "manifest.json"), "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, sort_keys=True, indent=2)
            fh.write("\n")
        manifests[side] = manifest
    return manifests


def render_experiment_media(
    experiment: Experiment,
    load_record,
    out_dir,
    frame_height: int = DEFAULT_FRAME_HEIGHT,
    frame_width: int = DEFAULT_FRAME_WIDTH,
):
    """Render every stimulus; `load_record` maps utterance_id to record."""
    for sid in sorted(experiment.stimuli):
        stimulus = experiment.stimuli[sid]
        render_stimulus_media(
            stimulus,
            load_record(stimulus.utterance_id),
            out_dir,
            frame_height=frame_height,
            frame_width=frame_width,
        )
