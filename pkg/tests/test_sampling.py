"""Window extraction and self-supervision set invariants."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from echosync import (
    ShortUtteranceWarning,
    TrainingSample,
    ValidationError,
    WindowPair,
    extract_window_pairs,
    make_selfsup_set,
    round_half_up,
)
from conftest import make_record


def test_extract_counts_and_shapes(rng):
    rec = make_record(rng, n_frames=23, frame_rate=24.0, sample_rate=22050.0)
    pairs = extract_window_pairs(rec, l=5)
    assert len(pairs) == 4  # floor(23/5), trailing 3 frames dropped
    for i, p in enumerate(pairs):
        assert p.index == i
        assert p.utterance_id == rec.id
        assert p.w_u.shape == (5, 16, 20)
        assert p.w_u.dtype == np.float32
        assert 0.0 <= p.w_u.min() and p.w_u.max() <= 1.0
        assert p.w_m.shape == (20, 30)
        assert p.w_m.dtype == np.float32


def test_extract_windows_scale_matches_raw(rng):
    rec = make_record(rng, n_frames=10, frame_rate=24.0, sample_rate=22050.0)
    pairs = extract_window_pairs(rec, l=5)
    np.testing.assert_allclose(
        pairs[1].w_u, rec.ultrasound.frames[5:10].astype(np.float32) / 255.0
    )


def test_extract_audio_spans_partition(rng):
    # Window i's span starts exactly where window i-1's ends.
    rec = make_record(rng, n_frames=15, frame_rate=24.0, sample_rate=22050.0)
    t = 5 / 24.0
    sr = 22050.0
    boundaries = [round_half_up(i * t * sr) for i in range(4)]
    assert boundaries[0] == 0
    assert all(b > a for a, b in zip(boundaries, boundaries[1:]))


def test_short_utterance_warns_and_returns_empty(rng):
    rec = make_record(rng, n_frames=3, frame_rate=24.0, sample_rate=22050.0)
    with pytest.warns(ShortUtteranceWarning):
        assert extract_window_pairs(rec, l=5) == []


def test_low_sample_rate_rejected(rng):
    # 5-frame window at 24 fps with sr=50 has ~10 samples: too few rows.
    rec = make_record(rng, n_frames=10, frame_rate=24.0, sample_rate=50.0)
    with pytest.raises(ValidationError, match="sample rate"):
        extract_window_pairs(rec, l=5)


def test_training_sample_invariants(rng):
    rec = make_record(rng, n_frames=10, frame_rate=24.0, sample_rate=22050.0)
    p0, p1 = extract_window_pairs(rec, l=5)
    with pytest.raises(ValidationError):
        TrainingSample(pair=p0, audio_index=1, label=1)  # true must keep own audio
    with pytest.raises(ValidationError):
        TrainingSample(pair=p0, audio_index=0, label=0)  # false must change audio
    with pytest.raises(ValidationError):
        TrainingSample(pair=p0, audio_index=0, label=2)


def _fake_pairs(uid, count, rng):
    pairs = []
    for i in range(count):
        pairs.append(
            WindowPair(
                utterance_id=uid,
                index=i,
                w_u=rng.random((5, 4, 4)).astype(np.float32),
                w_m=rng.random((20, 30)).astype(np.float32),
            )
        )
    return pairs


def test_selfsup_balance_and_derangement(rng):
    pairs = _fake_pairs("u1", 6, rng) + _fake_pairs("u2", 4, rng)
    samples = make_selfsup_set(pairs, seed=3)
    trues = [s for s in samples if s.label == 1]
    falses = [s for s in samples if s.label == 0]
    assert len(trues) == len(falses) == 10
    for s in falses:
        assert s.audio_index != s.pair.index
        # Within-utterance: donor audio exists in the same utterance.
        assert 0 <= s.audio_index < (6 if s.pair.utterance_id == "u1" else 4)


def test_selfsup_singleton_only_corpus_balances_to_empty(rng):
    # A 1-window utterance contributes a true but no false; with no
    # falses anywhere, strict balance drops every true.
    samples = make_selfsup_set(_fake_pairs("solo", 1, rng), seed=0)
    assert samples == []


def test_selfsup_surplus_trues_dropped_for_balance(rng):
    # Two singleton utterances contribute no falses; one multi does.
    pairs = (
        _fake_pairs("a", 1, rng) + _fake_pairs("b", 1, rng) + _fake_pairs("c", 3, rng)
    )
    samples = make_selfsup_set(pairs, seed=1)
    trues = [s for s in samples if s.label == 1]
    falses = [s for s in samples if s.label == 0]
    assert len(falses) == 3
    assert len(trues) == 3  # 5 available, 2 dropped


def test_selfsup_deterministic_per_seed(rng):
    pairs = _fake_pairs("u1", 5, rng) + _fake_pairs("u2", 7, rng)
    a = make_selfsup_set(pairs, seed=11)
    b = make_selfsup_set(pairs, seed=11)
    c = make_selfsup_set(pairs, seed=12)
    key = lambda xs: [(s.pair.utterance_id, s.pair.index, s.audio_index, s.label) for s in xs]
    assert key(a) == key(b)
    assert key(a) != key(c)  # different seed deranges differently


def test_selfsup_duplicate_index_rejected(rng):
    pairs = _fake_pairs("u1", 2, rng)
    pairs[1] = WindowPair(
        utterance_id="u1", index=0, w_u=pairs[1].w_u, w_m=pairs[1].w_m
    )
    with pytest.raises(ValidationError, match="duplicate"):
        make_selfsup_set(pairs, seed=0)


def test_selfsup_false_sample_uses_donor_audio(rng):
    pairs = _fake_pairs("u1", 4, rng)
    samples = make_selfsup_set(pairs, seed=5)
    by_index = {p.index: p for p in pairs}
    for s in samples:
        if s.label == 0:
            np.testing.assert_array_equal(s.pair.w_m, by_index[s.audio_index].w_m)
            np.testing.assert_array_equal(s.pair.w_u, by_index[s.pair.index].w_u)


@settings(max_examples=60, deadline=None)
@given(
    counts=st.lists(st.integers(min_value=1, max_value=9), min_size=1, max_size=8),
    seed=st.integers(min_value=0, max_value=2**31 - 1),
)
def test_selfsup_properties(counts, seed):
    rng = np.random.default_rng(0)
    pairs = []
    for u, count in enumerate(counts):
        pairs.extend(_fake_pairs(f"u{u}", count, rng))
    samples = make_selfsup_set(pairs, seed=seed)
    trues = [s for s in samples if s.label == 1]
    falses = [s for s in samples if s.label == 0]
    multi = sum(c for c in counts if c >= 2)
    assert len(falses) == multi
    assert len(trues) == len(falses)  # strict balance in every emitted set
    # Derangement property per utterance: bijection with no fixed point.
    per_utt: dict = {}
    for s in falses:
        per_utt.setdefault(s.pair.utterance_id, []).append((s.pair.index, s.audio_index))
    for uid, pairs_fu in per_utt.items():
        sources = [i for i, _ in pairs_fu]
        donors = [j for _, j in pairs_fu]
        assert sorted(sources) == sorted(donors)  # permutation
        assert all(i != j for i, j in pairs_fu)  # no fixed point
