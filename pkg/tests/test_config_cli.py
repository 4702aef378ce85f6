"""Configuration parsing and the command-line pipeline driver."""

import json
import os

import numpy as np
import pytest

from echosync import cli
from echosync.config import (
    CONFIG_ENV_VAR,
    PipelineConfig,
    format_config,
    load_config,
    parse_config_text,
    parse_grid_spec,
)
from echosync.errors import UsageError, ValidationError
from echosync.sync import CLEFT_GRID
from synthetic import synth_corpus

# ---------------------------------------------------------------------------
# grid specs


def test_grid_spec_named_preset():
    assert parse_grid_spec("cleft") is CLEFT_GRID
    assert parse_grid_spec(" CLEFT ") is CLEFT_GRID


def test_grid_spec_numeric_range():
    grid = parse_grid_spec("-0.09:0.09:0.045")
    assert grid.offsets == (-90.0, -45.0, 0.0, 45.0, 90.0)


def test_grid_spec_rejects_malformed():
    for bad in ("0.1:0.2", "a:b:c", "steady", "0:1:0"):
        with pytest.raises(ValidationError):
            parse_grid_spec(bad)


def test_grid_value_merging():
    merged = cli._merge_grid_values(["sync", "--grid", "-1.75:0.75:0.045", "--jobs", "2"])
    assert merged == ["sync", "--grid=-1.75:0.75:0.045", "--jobs", "2"]
    untouched = ["sync", "--grid", "cleft"]
    assert cli._merge_grid_values(untouched) == untouched
    prejoined = ["sync", "--grid=-1:-0.5:0.1"]
    assert cli._merge_grid_values(prejoined) == prejoined


# ---------------------------------------------------------------------------
# config files


def test_config_defaults():
    cfg = PipelineConfig()
    assert cfg.target_fps == 24.0
    assert cfg.target_sample_rate == 22050.0
    assert (cfg.frame_height, cfg.frame_width) == (63, 138)
    assert cfg.window_frames == 5
    assert cfg.feature_dim == 30
    assert cfg.learning_rate == 0.001
    assert cfg.grid == "cleft"


def test_config_round_trip():
    cfg = PipelineConfig(learning_rate=0.01, epochs=3, grid="-0.1:0.1:0.05")
    back = parse_config_text(format_config(cfg))
    assert back == cfg


def test_config_parsing_tolerates_comments_and_blanks():
    cfg = parse_config_text("# a comment\n\nepochs = 7\n  batch_size=8  \n")
    assert cfg.epochs == 7
    assert cfg.batch_size == 8


def test_config_parsing_rejections():
    with pytest.raises(ValidationError, match="unknown key"):
        parse_config_text("volume = 11\n")
    with pytest.raises(ValidationError, match="duplicate"):
        parse_config_text("epochs = 1\nepochs = 2\n")
    with pytest.raises(ValidationError, match="expects"):
        parse_config_text("epochs = soon\n")
    with pytest.raises(ValidationError, match="key = value"):
        parse_config_text("epochs\n")
    with pytest.raises(ValidationError):
        parse_config_text("boundary = fuzzy\n")
    with pytest.raises(ValidationError):
        parse_config_text("validation_fraction = 1.5\n")


def test_load_config_from_env(tmp_path, monkeypatch):
    path = tmp_path / "pipeline.cfg"
    path.write_text("epochs = 4\n", encoding="utf-8")
    monkeypatch.setenv(CONFIG_ENV_VAR, str(path))
    assert load_config().epochs == 4
    monkeypatch.delenv(CONFIG_ENV_VAR)
    assert load_config().epochs == PipelineConfig().epochs
    with pytest.raises(UsageError):
        load_config(str(tmp_path / "missing.cfg"))


# ---------------------------------------------------------------------------
# full pipeline through the CLI entry point


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Raw corpus -> preprocess -> samples -> model -> predictions."""
    root = tmp_path_factory.mktemp("pipeline")
    raw = root / "raw"
    raw.mkdir()
    synth_corpus(raw, n=6, seed=21, duration_s=2.0, height=24, width=24)
    config = root / "pipeline.cfg"
    config.write_text(
        "target_fps = 24\n"
        "target_sample_rate = 11025\n"
        "frame_height = 24\n"
        "frame_width = 24\n"
        "epochs = 2\n"
        "batch_size = 16\n"
        "learning_rate = 0.005\n",
        encoding="utf-8",
    )
    pre = root / "pre"
    samples = root / "samples.bin"
    model = root / "model.bin"
    preds = root / "predictions.jsonl"
    base = ["--config", str(config)]
    assert cli.main(["preprocess", *base, "--in", str(raw), "--out", str(pre)]) == 0
    assert cli.main(["make-samples", *base, "--in", str(pre), "--out", str(samples)]) == 0
    assert (
        cli.main(
            [
                "train",
                *base,
                "--samples",
                str(samples),
                "--out",
                str(model),
                "--arch",
                "compact",
                "--report",
                str(root / "train_report"),
            ]
        )
        == 0
    )
    assert (
        cli.main(
            [
                "sync",
                *base,
                "--model",
                str(model),
                "--grid",
                "-0.09:0.09:0.045",
                "--in",
                str(pre),
                "--out",
                str(preds),
            ]
        )
        == 0
    )
    return {
        "root": root,
        "raw": raw,
        "pre": pre,
        "config": config,
        "samples": samples,
        "model": model,
        "predictions": preds,
    }


def test_preprocess_outputs(pipeline):
    from echosync.data_io import list_utterance_ids, load_utterance

    ids = list_utterance_ids(pipeline["pre"])
    assert len(ids) == 6
    rec = load_utterance(pipeline["pre"], ids[0])
    assert rec.ultrasound.frames.shape[1:] == (24, 24)
    assert rec.audio.sample_rate == 11025.0


def test_make_samples_container(pipeline):
    from echosync.container import load_container

    meta, tensors = load_container(pipeline["samples"])
    assert meta["format"] == "selfsup-samples"
    assert meta["version"] == 1
    tensors = dict(tensors)
    labels = tensors["labels"]
    assert labels.sum() * 2 == len(labels)
    assert tensors["w_u"].shape[1:] == (5, 24, 24)
    assert tensors["w_m"].shape[1:] == (20, 30)


def test_train_report_files(pipeline):
    report = pipeline["root"] / "train_report"
    assert (report / "loss_curves.png").exists()
    lines = (report / "training.tsv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "epoch\ttrain_loss\tval_loss\tlearning_rate"
    assert len(lines) == 3


def test_sync_predictions_structure(pipeline):
    lines = pipeline["predictions"].read_text(encoding="utf-8").splitlines()
    assert len(lines) == 6
    grid = parse_grid_spec("-0.09:0.09:0.045")
    for line in lines:
        doc = json.loads(line)
        assert doc["predicted_offset_ms"] in grid.offsets
        assert len(doc["candidates"]) == len(grid)


def test_evaluate_report(pipeline, capsys, tmp_path):
    from echosync.data_io import list_utterance_ids

    truth = tmp_path / "truth.tsv"
    rows = [
        f"{uid}\t0.0\tsynth\tA\tspk{i % 2}"
        for i, uid in enumerate(list_utterance_ids(pipeline["pre"]))
    ]
    truth.write_text("# id\toffset\n" + "\n".join(rows) + "\n", encoding="utf-8")
    out = tmp_path / "report"
    code = cli.main(
        [
            "evaluate",
            "--pred",
            str(pipeline["predictions"]),
            "--truth",
            str(truth),
            "--group",
            "speaker",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    table = capsys.readouterr().out
    assert "Speaker" in table
    assert "All" in table
    for name in (
        "report.txt",
        "groups.tsv",
        "rows.tsv",
        "discrepancy_hist.png",
        "accuracy_by_group.png",
    ):
        assert (out / name).exists()
    assert (out / "report.txt").read_text(encoding="utf-8") in table


def test_evaluate_requires_truth_coverage(pipeline, tmp_path, capsys):
    truth = tmp_path / "truth.tsv"
    truth.write_text("someother001A\t0.0\n", encoding="utf-8")
    code = cli.main(
        ["evaluate", "--pred", str(pipeline["predictions"]), "--truth", str(truth)]
    )
    assert code == 2
    assert "no truth offsets" in capsys.readouterr().err


def test_preference_experiment_build_results_and_stats(pipeline, tmp_path, capsys):
    from echosync.data_io import list_utterance_ids
    from echosync.experiment import EventStore, load_experiment

    ids = list_utterance_ids(pipeline["pre"])
    # Hand-written predictions that differ detectably from hardware for
    # the first two utterances only; the rest become control candidates.
    preds = tmp_path / "model_offsets.jsonl"
    with open(preds, "w", encoding="utf-8") as fh:
        for i, uid in enumerate(ids):
            offset = 200.0 if i < 2 else 0.0
            fh.write(
                json.dumps(
                    {
                        "utterance_id": uid,
                        "predicted_offset_ms": offset,
                        "candidates": [
                            {"offset_ms": offset, "mean_distance": 0.1, "windows": 3}
                        ],
                    }
                )
                + "\n"
            )
    hardware = tmp_path / "hardware.tsv"
    hardware.write_text(
        "".join(f"{uid}\t0.0\n" for uid in ids), encoding="utf-8"
    )
    controls = tmp_path / "controls.txt"
    controls.write_text("\n".join(ids[2:4]) + "\n", encoding="utf-8")
    exp_dir = tmp_path / "exp"
    code = cli.main(
        [
            "experiment",
            "build",
            "--kind",
            "preference",
            "--data",
            str(pipeline["pre"]),
            "--out",
            str(exp_dir),
            "--participants",
            "2",
            "--tests",
            "2",
            "--controls-per-participant",
            "2",
            "--pred",
            str(preds),
            "--hardware",
            str(hardware),
            "--controls",
            str(controls),
            "--no-media",
            "--seed",
            "5",
        ]
    )
    assert code == 0
    capsys.readouterr()
    experiment = load_experiment(exp_dir / "experiment.json")
    assert len(experiment.stimuli) == 4
    assert len(experiment.sessions) == 2

    # No judgments yet: results must refuse, even with allow-partial.
    assert cli.main(["experiment", "results", "--experiment", str(exp_dir)]) == 2
    capsys.readouterr()
    assert (
        cli.main(
            ["experiment", "results", "--experiment", str(exp_dir), "--allow-partial"]
        )
        == 3
    )
    capsys.readouterr()

    with EventStore(exp_dir / "events.jsonl", experiment) as store:
        for sid in store.session_ids():
            for stim in experiment.sessions[sid].stimulus_ids:
                store.record_play(sid, stim, "A", 1.0)
                store.record_play(sid, stim, "B", 1.0)
                choice = experiment.stimuli[stim].model_side
                if choice == "none":
                    choice = experiment.stimuli[stim].correct_side
                store.record_judgment(sid, stim, choice)

    out_dir = tmp_path / "results"
    code = cli.main(
        [
            "experiment",
            "results",
            "--experiment",
            str(exp_dir),
            "--out",
            str(out_dir),
        ]
    )
    assert code == 0
    printed = capsys.readouterr().out
    doc = json.loads((out_dir / "results.json").read_text(encoding="utf-8"))
    assert doc["preference"]["proportion"] == 1.0
    assert doc["controls"]["accuracy"] == 1.0
    assert json.loads(printed[: printed.rfind("}") + 1]) == doc
    assert (out_dir / "preference_by_participant.png").exists()

    pron = tmp_path / "pron.tsv"
    pron.write_text(
        "synthetic\ts ih n th eh t ih k\ntone\tt ow n\nsweep\ts w iy p\n",
        encoding="utf-8",
    )
    summary_path = tmp_path / "stats.json"
    code = cli.main(
        [
            "stats",
            "--experiment",
            str(exp_dir),
            "--data",
            str(pipeline["pre"]),
            "--pronunciations",
            str(pron),
            "--l2",
            "0.5",
            "--out",
            str(summary_path),
        ]
    )
    assert code == 0
    capsys.readouterr()
    summary = json.loads(summary_path.read_text(encoding="utf-8"))
    # Preference judgments carry no outcome; only the 4 control
    # judgments (2 controls x 2 participants) are regressable.
    assert summary["observations"] == 4
    assert summary["converged"] is True
    assert any(c.startswith("phone:") for c in summary["weights"])


# ---------------------------------------------------------------------------
# failure modes and exit codes


def test_usage_errors_exit_one(capsys):
    assert cli.main([]) == 1
    assert cli.main(["does-not-exist"]) == 1
    assert cli.main(["train", "--samples"]) == 1
    capsys.readouterr()


def test_missing_input_exits_three(tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    code = cli.main(
        ["preprocess", "--in", str(empty), "--out", str(tmp_path / "out")]
    )
    assert code == 3
    assert "no utterances" in capsys.readouterr().err


def test_missing_file_exits_three(tmp_path, capsys):
    code = cli.main(
        [
            "evaluate",
            "--pred",
            str(tmp_path / "nope.jsonl"),
            "--truth",
            str(tmp_path / "nope.tsv"),
        ]
    )
    assert code == 3
    capsys.readouterr()


def test_overwrite_refusal(pipeline, tmp_path, capsys):
    # Re-running into the same populated directory requires --overwrite.
    code = cli.main(
        [
            "preprocess",
            "--config",
            str(pipeline["config"]),
            "--in",
            str(pipeline["raw"]),
            "--out",
            str(pipeline["pre"]),
        ]
    )
    assert code == 1
    assert "--overwrite" in capsys.readouterr().err
    code = cli.main(
        [
            "make-samples",
            "--config",
            str(pipeline["config"]),
            "--in",
            str(pipeline["pre"]),
            "--out",
            str(pipeline["samples"]),
        ]
    )
    assert code == 1
    capsys.readouterr()


def test_bad_config_path_exits_one(capsys):
    assert cli.main(["preprocess", "--config", "/nonexistent.cfg", "--in", "x", "--out", "y"]) == 1
    assert "does not exist" in capsys.readouterr().err


def test_truth_file_parsing(tmp_path):
    path = tmp_path / "truth.tsv"
    path.write_text(
        "# comment\nutt001A\t-45.5\ttherapy\tA\tspk1\nutt002B\t30\n",
        encoding="utf-8",
    )
    rows = cli.parse_truth_file(path)
    assert rows["utt001A"].offset_ms == -45.5
    assert rows["utt001A"].dataset == "therapy"
    assert rows["utt002B"].speaker == ""
    path.write_text("utt001A\tnotanumber\n", encoding="utf-8")
    with pytest.raises(cli.FormatError):
        cli.parse_truth_file(path)
    path.write_text("utt001A\t1.0\nutt001A\t2.0\n", encoding="utf-8")
    with pytest.raises(cli.FormatError, match="duplicate"):
        cli.parse_truth_file(path)
    path.write_text("# nothing\n", encoding="utf-8")
    with pytest.raises(cli.EmptyDataError):
        cli.parse_truth_file(path)
