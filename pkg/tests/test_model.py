"""Two-stream model: architecture arithmetic, loss cases, checkpoints."""

import numpy as np
import pytest

from echosync import FormatError, ShapeError, ValidationError
from echosync.neural import (
    CONTRASTIVE_MARGIN,
    ConvSpec,
    StreamSpec,
    TwoStreamModel,
    check_model,
    classify,
    contrastive_loss,
    default_audio_spec,
    default_ultrasound_spec,
    load_model,
    save_model,
)
from echosync.neural.layers import BatchNorm, Conv2D, Dense, MaxPool2D, ReLU

from oracles import CONTRASTIVE_CASES


def tiny_specs():
    ultra = StreamSpec(
        in_shape=(2, 8, 9), convs=[ConvSpec(3, 3, True)], fc=[6, 4]
    )
    audio = StreamSpec(
        in_shape=(1, 8, 7),
        convs=[ConvSpec(2, 3, False), ConvSpec(3, 3, True)],
        fc=[4],
    )
    return ultra, audio


def tiny_model(dtype=np.float32, seed=0):
    ultra, audio = tiny_specs()
    return TwoStreamModel(ultra, audio, seed=seed, dtype=dtype)


class TestArchitecture:
    def test_default_ultrasound_feature_map(self):
        # 63x138 -> conv5 59x134 -> pool 29x67 -> conv5 25x63 -> pool 12x31
        # -> conv5 8x27 -> pool 4x13 at 128 channels.
        spec = default_ultrasound_spec()
        assert spec.feature_map_shape() == (128, 4, 13)
        assert 128 * 4 * 13 == 6656

    def test_default_audio_feature_map(self):
        # 20x30 -> conv3 18x28 (no pool) -> conv3 16x26 -> pool 8x13
        # -> conv3 6x11 -> pool 3x5 at 128 channels.
        spec = default_audio_spec()
        assert spec.feature_map_shape() == (128, 3, 5)
        assert 128 * 3 * 5 == 1920

    def test_layer_sequence_conv_bn_relu_pool(self):
        model = tiny_model()
        kinds = [type(l) for l in model.ultra_layers]
        assert kinds[:4] == [Conv2D, BatchNorm, ReLU, MaxPool2D]
        # FC blocks: dense -> bn -> relu, twice.
        assert kinds[5:8] == [Dense, BatchNorm, ReLU]
        assert kinds[8:11] == [Dense, BatchNorm, ReLU]

    def test_embedding_dims_must_match(self):
        ultra, audio = tiny_specs()
        audio.fc[-1] = 5
        with pytest.raises(ValidationError, match="embedding dimension"):
            TwoStreamModel(ultra, audio)

    def test_spec_round_trips_through_dict(self):
        ultra, _ = tiny_specs()
        back = StreamSpec.from_dict(ultra.to_dict())
        assert back == ultra

    def test_too_small_input_rejected_at_spec(self):
        with pytest.raises(ValidationError):
            StreamSpec(
                in_shape=(1, 4, 4), convs=[ConvSpec(8, 5, True)], fc=[4]
            ).feature_map_shape()


class TestForward:
    def test_embedding_shapes(self, rng):
        model = tiny_model()
        wu = rng.random((3, 2, 8, 9), dtype=np.float32)
        wm = rng.random((3, 8, 7), dtype=np.float32)
        v_u, v_m, d = model.forward_batch(wu, wm)
        assert v_u.shape == (3, 4) and v_m.shape == (3, 4)
        assert d.shape == (3,) and d.dtype == np.float64
        assert np.all(d >= 0)

    def test_audio_accepts_3d_and_4d(self, rng):
        model = tiny_model()
        wm3 = rng.random((2, 8, 7), dtype=np.float32)
        a = model.embed_audio(wm3)
        b = model.embed_audio(wm3[:, None, :, :])
        np.testing.assert_array_equal(a, b)

    def test_wrong_shape_rejected(self, rng):
        model = tiny_model()
        with pytest.raises(ShapeError, match="ultrasound"):
            model.embed_ultrasound(rng.random((1, 2, 9, 9), dtype=np.float32))

    def test_single_pair_matches_batch(self, rng):
        model = tiny_model()
        wu = rng.random((2, 8, 9), dtype=np.float32)
        wm = rng.random((8, 7), dtype=np.float32)
        pair = model.forward(wu, wm)
        _, _, d = model.forward_batch(wu[None], wm[None])
        assert pair.d == pytest.approx(float(d[0]), abs=1e-9)

    def test_inference_mode_deterministic_across_batches(self, rng):
        model = tiny_model()
        wu = rng.random((4, 2, 8, 9), dtype=np.float32)
        wm = rng.random((4, 8, 7), dtype=np.float32)
        _, _, d_all = model.forward_batch(wu, wm)
        _, _, d_one = model.forward_batch(wu[:1], wm[:1])
        assert d_all[0] == pytest.approx(float(d_one[0]), abs=1e-12)

    def test_same_seed_same_init(self, rng):
        a, b = tiny_model(seed=7), tiny_model(seed=7)
        for (_, la, ka), (_, lb, kb) in zip(a.named_parameters(), b.named_parameters()):
            np.testing.assert_array_equal(la.params[ka], lb.params[kb])
        c = tiny_model(seed=8)
        weights_a = next(iter(a.ultra_layers[0].params.values()))
        weights_c = next(iter(c.ultra_layers[0].params.values()))
        assert not np.array_equal(weights_a, weights_c)


class TestLoss:
    @pytest.mark.parametrize("distances,labels,expected", CONTRASTIVE_CASES)
    def test_hand_cases_exact(self, distances, labels, expected):
        assert contrastive_loss(np.array(distances), np.array(labels)) == pytest.approx(
            expected, abs=1e-12
        )

    def test_margin_constant(self):
        assert CONTRASTIVE_MARGIN == 1.0

    def test_validation(self):
        with pytest.raises(ValidationError, match="empty"):
            contrastive_loss(np.array([]), np.array([]))
        with pytest.raises(ValidationError, match="nonnegative"):
            contrastive_loss(np.array([-0.1]), np.array([1]))
        with pytest.raises(ValidationError, match="labels"):
            contrastive_loss(np.array([0.5]), np.array([2]))
        with pytest.raises(ValidationError, match="shape"):
            contrastive_loss(np.array([0.5, 0.6]), np.array([1]))


class TestClassify:
    def test_threshold_boundary_is_false(self):
        assert classify(0.49999) is True
        assert classify(0.5) is False
        assert classify(0.50001) is False

    def test_custom_threshold(self):
        assert classify(0.9, threshold=1.0) is True

    def test_negative_distance_rejected(self):
        with pytest.raises(ValidationError):
            classify(-0.01)


class TestGradients:
    def test_full_model_gradcheck(self, rng):
        model = tiny_model(dtype=np.float64, seed=3)
        wu = rng.standard_normal((3, 2, 8, 9))
        wm = rng.standard_normal((3, 8, 7))
        y = np.array([1, 0, 1])
        err = check_model(model, wu, wm, y)
        assert err < 1e-4

    def test_gradcheck_requires_float64(self, rng):
        model = tiny_model(dtype=np.float32)
        with pytest.raises(ValueError, match="float64"):
            check_model(
                model,
                rng.random((2, 2, 8, 9)),
                rng.random((2, 8, 7)),
                np.array([1, 0]),
            )

    def test_training_step_at_zero_distance_is_finite(self, rng):
        # Identical streams fed identical input give d = 0 for a true
        # pair; the loss gradient there is exactly zero, not NaN.
        spec = StreamSpec(in_shape=(1, 6, 6), convs=[ConvSpec(2, 3, False)], fc=[4])
        model = TwoStreamModel(spec, spec, seed=0, dtype=np.float64)
        model.audio_layers = model.ultra_layers  # share weights -> d == 0
        x = rng.standard_normal((2, 1, 6, 6))
        loss = model.training_step(x, x, np.array([1, 1]))
        assert loss == 0.0


class TestCheckpoint:
    def test_round_trip_preserves_outputs(self, tmp_path, rng):
        model = tiny_model(seed=5)
        # Touch the BN buffers so they are non-trivial.
        wu = rng.random((4, 2, 8, 9), dtype=np.float32)
        wm = rng.random((4, 8, 7), dtype=np.float32)
        model.training_step(wu, wm, np.array([1, 0, 1, 0]))
        save_model(model, tmp_path / "m.bin")
        back = load_model(tmp_path / "m.bin")
        assert back.mode == "inference"
        _, _, d1 = model.forward_batch(wu, wm, training=False)
        _, _, d2 = back.forward_batch(wu, wm, training=False)
        np.testing.assert_array_equal(d1, d2)

    def test_save_load_save_byte_identical(self, tmp_path, rng):
        model = tiny_model(seed=9)
        model.training_step(
            rng.random((2, 2, 8, 9), dtype=np.float32),
            rng.random((2, 8, 7), dtype=np.float32),
            np.array([1, 0]),
        )
        save_model(model, tmp_path / "a.bin")
        save_model(load_model(tmp_path / "a.bin"), tmp_path / "b.bin")
        assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()

    def test_wrong_format_rejected(self, tmp_path):
        from echosync import save_container

        save_container(tmp_path / "x.bin", {"format": "other", "version": 1}, [])
        with pytest.raises(FormatError):
            load_model(tmp_path / "x.bin")
