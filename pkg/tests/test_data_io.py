"""Per-utterance file set round trips and format validation."""

import numpy as np
import pytest

from echosync import (
    AudioSignal,
    EmptyDataError,
    FormatError,
    TruncationError,
    UltrasoundParams,
    ValidationError,
    list_utterance_ids,
    load_utterance,
    parse_param,
    parse_ult,
    read_wav,
    write_param,
    write_ult,
    write_utterance,
    write_wav,
)
from conftest import make_record


def test_param_round_trip_preserves_extras():
    params = UltrasoundParams(
        frame_rate=121.5,
        scan_lines=63,
        echo_returns=412,
        field_of_view=92.0,
        hardware_offset_ms=-135.5,
        first_frame_time=0.04,
        extras={"Vendor": "probe-x", "Gain": "17"},
    )
    text = write_param(params)
    back = parse_param(text)
    assert back == params
    assert write_param(back) == text


def test_param_aliases_map_to_canonical_keys():
    text = "framerate=60\nscanlines=4\nechoreturns=5\nfov=90\nsyncoffset=12.5\n"
    params = parse_param(text)
    assert params.frame_rate == 60
    assert params.scan_lines == 4
    assert params.echo_returns == 5
    assert params.hardware_offset_ms == 12.5


def test_param_missing_required_key_raises():
    with pytest.raises(FormatError, match="SyncOffsetMs"):
        parse_param("FramesPerSec=60\nNumVectors=4\nPixPerVector=5\nFieldOfView=90\n")


def test_param_bad_number_raises():
    with pytest.raises(FormatError, match="line 1"):
        parse_param("FramesPerSec=sixty\nNumVectors=4\nPixPerVector=5\n")


def test_ult_truncated_buffer_raises(rng):
    rec = make_record(rng)
    data = write_ult(rec.ultrasound)
    with pytest.raises(TruncationError):
        parse_ult(data[:-7], rec.ultrasound.params)


def test_ult_empty_buffer_raises(rng):
    rec = make_record(rng)
    with pytest.raises(EmptyDataError):
        parse_ult(b"", rec.ultrasound.params)


def test_wav_round_trip_is_sample_exact(tmp_path, rng):
    quantised = np.round(rng.uniform(-1, 1, 2048) * 32767.0) / 32767.0
    sig = AudioSignal(samples=quantised, sample_rate=16000.0)
    write_wav(tmp_path / "a.wav", sig)
    back = read_wav(tmp_path / "a.wav")
    assert back.sample_rate == 16000.0
    np.testing.assert_array_equal(back.samples, quantised)


def test_utterance_round_trip(tmp_path, rng):
    rec = make_record(rng, uid="speaker01_002B", type_code="B")
    rec.timestamp = "2021-03-04T10:11:12"
    write_utterance(rec, tmp_path)
    back = load_utterance(tmp_path, rec.id)
    assert back.id == rec.id
    assert back.type_code == "B"
    assert back.prompt == rec.prompt
    assert back.timestamp == rec.timestamp
    assert back.probe_view == rec.probe_view
    np.testing.assert_array_equal(back.ultrasound.frames, rec.ultrasound.frames)
    np.testing.assert_array_equal(back.audio.samples, rec.audio.samples)


def test_utterance_round_trip_is_byte_identical(tmp_path, rng):
    rec = make_record(rng, uid="utt9C", type_code="C")
    first = write_utterance(rec, tmp_path / "one")
    back = load_utterance(tmp_path / "one", rec.id)
    second = write_utterance(back, tmp_path / "two")
    for ext in ("param", "ult", "wav", "txt"):
        assert first[ext].read_bytes() == second[ext].read_bytes(), ext


def test_list_utterance_ids_requires_complete_sets(tmp_path, rng):
    write_utterance(make_record(rng, uid="fullA"), tmp_path)
    (tmp_path / "orphanA.param").write_text("FramesPerSec=60\n")
    assert list_utterance_ids(tmp_path) == ["fullA"]


def test_invalid_type_code_rejected(rng):
    with pytest.raises(ValidationError, match="type code"):
        make_record(rng, type_code="Z")


def test_path_separator_in_id_rejected(rng):
    with pytest.raises(ValidationError, match="path separator"):
        make_record(rng, uid="../evil")
