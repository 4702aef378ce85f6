"""Start a tiny threshold experiment service for the web client tests.

Usage: python3 fixture_server.py WORK_DIR PORT

Builds two synthetic utterances, renders their stimulus media under
WORK_DIR and serves the participant API on 127.0.0.1:PORT until killed.
"""

import argparse
import os

import numpy as np
import uvicorn

from echosync import (
    AudioSignal,
    RawUltrasoundSequence,
    UltrasoundParams,
    UtteranceRecord,
)
from echosync.experiment import (
    Experiment,
    EventStore,
    SessionSpec,
    StimulusPair,
    create_app,
    render_stimulus_media,
)
from echosync.stats import THRESHOLD_ERROR


def synth_record(uid, seed, n_frames=12, frame_rate=24.0, sample_rate=8000.0):
    rng = np.random.default_rng(seed)
    params = UltrasoundParams(
        frame_rate=frame_rate,
        scan_lines=16,
        echo_returns=20,
        field_of_view=92.0,
        hardware_offset_ms=0.0,
    )
    frames = rng.integers(0, 256, size=(n_frames, 16, 20), dtype=np.uint8)
    n_samples = int(round(n_frames / frame_rate * sample_rate))
    samples = np.round(rng.uniform(-0.5, 0.5, n_samples) * 32767.0) / 32767.0
    return UtteranceRecord(
        id=uid,
        type_code="A",
        prompt="a test prompt",
        audio=AudioSignal(samples=samples, sample_rate=sample_rate),
        ultrasound=RawUltrasoundSequence(params=params, frames=frames),
    )


def build(work_dir):
    stimuli = {
        "s0000": StimulusPair(
            stimulus_id="s0000",
            utterance_id="utt001A",
            side_a_offset=0.0,
            side_b_offset=45.0,
            correct_side="A",
            provenance=THRESHOLD_ERROR,
            error_ms=45.0,
        ),
        "s0001": StimulusPair(
            stimulus_id="s0001",
            utterance_id="utt002A",
            side_a_offset=0.0,
            side_b_offset=0.0,
            correct_side="none",
            provenance=THRESHOLD_ERROR,
            error_ms=0.0,
        ),
    }
    sessions = {
        "p01": SessionSpec(participant_id="p01", stimulus_ids=["s0000", "s0001"]),
        "p02": SessionSpec(participant_id="p02", stimulus_ids=["s0001", "s0000"]),
    }
    experiment = Experiment(
        experiment_id="ui", kind="threshold", stimuli=stimuli, sessions=sessions
    )
    media_root = os.path.join(work_dir, "media")
    records = {
        uid: synth_record(uid, seed) for uid, seed in (("utt001A", 1), ("utt002A", 2))
    }
    for stimulus in experiment.stimuli.values():
        render_stimulus_media(
            stimulus,
            records[stimulus.utterance_id],
            media_root,
            frame_height=60,
            frame_width=80,
        )
    store = EventStore(os.path.join(work_dir, "events.jsonl"), experiment)
    return create_app(experiment, store, media_root)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("work_dir")
    parser.add_argument("port", type=int)
    args = parser.parse_args()
    app = build(args.work_dir)
    uvicorn.run(app, host="127.0.0.1", port=args.port, log_level="warning")


if __name__ == "__main__":
    main()
