"""Command-line pipeline driver.

Subcommands: preprocess, make-samples, train, sync, evaluate,
experiment build|serve|results, stats. Exit codes: 0 success, 1 usage,
2 validation, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import data_io
from .config import CONFIG_ENV_VAR, PipelineConfig, load_config, parse_grid_spec
from .container import load_container, save_container
from .data_io import UltrasoundParams, RawUltrasoundSequence, UtteranceRecord
from .dsp import resample_audio, resample_ultrasound, resize_frame
from .errors import (
    EchosyncError,
    EmptyDataError,
    FormatError,
    NumericFailureError,
    UsageError,
    ValidationError,
)
from .evaluate import EvalRow, aggregate
from .experiment import (
    EventStore,
    PreferencePlan,
    ThresholdPlan,
    build_preference_experiment,
    build_threshold_experiment,
    create_app,
    experiment_results,
    load_experiment,
    render_experiment_media,
    save_experiment,
)
from .neural import (
    ConvSpec,
    StreamSpec,
    TrainConfig,
    TwoStreamModel,
    default_audio_spec,
    default_ultrasound_spec,
    load_model,
    save_model,
    train as train_model,
)
from .sampling import extract_window_pairs, make_selfsup_set
from .stats import (
    build_design_matrix,
    fit_logistic,
    mcfadden_r2,
    null_log_likelihood,
    parse_pronunciation_dict,
)
from .sync import read_predictions, synchronise, write_predictions

SAMPLES_FORMAT = "selfsup-samples"
SAMPLES_VERSION = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _merge_grid_values(argv: list) -> list:
    """Join `--grid -1.75:0.75:0.045` so argparse keeps the value."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok == "--grid" and i + 1 < len(argv) and argv[i + 1].startswith("-") and ":" in argv[i + 1]:
            out.append(f"--grid={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def _refuse_overwrite(path, overwrite: bool):
    if overwrite:
        return
    if os.path.isdir(path) and os.listdir(path):
        raise UsageError(f"output directory {path!r} is not empty; pass --overwrite to replace")
    if os.path.isfile(path):
        raise UsageError(f"output file {path!r} exists; pass --overwrite to replace")


@dataclass
class TruthRow:
    utterance_id: str
    offset_ms: float
    dataset: str = ""
    type_code: str = ""
    speaker: str = ""


def parse_truth_file(path) -> dict:
    """TSV: utterance_id, offset_ms, [dataset], [type], [speaker]."""
    rows: dict[str, TruthRow] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                raise FormatError(f"{path} line {lineno}: expected at least id<TAB>offset")
            try:
                offset = float(parts[1])
            except ValueError as exc:
                raise FormatError(
                    f"{path} line {lineno}: offset {parts[1]!r} is not numeric"
                ) from exc
            uid = parts[0].strip()
            if uid in rows:
                raise FormatError(f"{path} line {lineno}: duplicate utterance {uid!r}")
            rows[uid] = TruthRow(
                utterance_id=uid,
                offset_ms=offset,
                dataset=parts[2].strip() if len(parts) > 2 else "",
                type_code=parts[3].strip() if len(parts) > 3 else "",
                speaker=parts[4].strip() if len(parts) > 4 else "",
            )
    if not rows:
        raise EmptyDataError(f"{path}: no truth rows")
    return rows


def _cmd_preprocess(args, cfg: PipelineConfig) -> int:
    ids = data_io.list_utterance_ids(args.input)
    if not ids:
        raise EmptyDataError(f"no utterances found under {args.input!r}")
    _refuse_overwrite(args.out, args.overwrite)
    os.makedirs(args.out, exist_ok=True)

    def process(uid: str) -> str:
        rec = data_io.load_utterance(args.input, uid)
        audio = resample_audio(rec.audio, cfg.target_sample_rate)
        ultra = resample_ultrasound(rec.ultrasound, cfg.target_fps)
        frames = np.stack(
            [resize_frame(f, cfg.frame_height, cfg.frame_width) for f in ultra.frames]
        )
        params = UltrasoundParams(
            frame_rate=ultra.params.frame_rate,
            scan_lines=cfg.frame_height,
            echo_returns=cfg.frame_width,
            field_of_view=ultra.params.field_of_view,
            hardware_offset_ms=ultra.params.hardware_offset_ms,
            first_frame_time=ultra.params.first_frame_time,
            extras=dict(ultra.params.extras),
        )
        out_rec = UtteranceRecord(
            id=rec.id,
            type_code=rec.type_code,
            prompt=rec.prompt,
            audio=audio,
            ultrasound=RawUltrasoundSequence(params=params, frames=frames),
            probe_view=rec.probe_view,
            timestamp=rec.timestamp,
        )
        data_io.write_utterance(out_rec, args.out)
        return uid

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            list(pool.map(process, ids))
    else:
        for uid in ids:
            process(uid)
    print(f"preprocessed {len(ids)} utterances into {args.out}")
    return 0


def _cmd_make_samples(args, cfg: PipelineConfig) -> int:
    ids = data_io.list_utterance_ids(args.input)
    if not ids:
        raise EmptyDataError(f"no utterances found under {args.input!r}")
    _refuse_overwrite(args.out, args.overwrite)
    seed = cfg.seed if args.seed is None else args.seed
    mfcc_cfg = cfg.mfcc_config()
    pairs = []
    for uid in ids:
        rec = data_io.load_utterance(args.input, uid)
        pairs.extend(extract_window_pairs(rec, cfg.window_frames, mfcc_cfg))
    if not pairs:
        raise EmptyDataError("no complete windows in the input corpus")
    samples = make_selfsup_set(pairs, seed)
    utterances = sorted({s.pair.utterance_id for s in samples})
    index = {u: i for i, u in enumerate(utterances)}
    w_u = np.stack([s.pair.w_u for s in samples]).astype(np.float32)
    w_m = np.stack([s.pair.w_m for s in samples]).astype(np.float32)
    labels = np.array([s.label for s in samples], dtype=np.int64)
    info = np.array(
        [[index[s.pair.utterance_id], s.pair.index, s.audio_index, s.label] for s in samples],
        dtype=np.int64,
    )
    meta = {
        "format": SAMPLES_FORMAT,
        "version": SAMPLES_VERSION,
        "window_frames": cfg.window_frames,
        "feature_dim": cfg.feature_dim,
        "seed": seed,
        "utterances": utterances,
    }
    save_container(
        args.out,
        meta,
        [("w_u", w_u), ("w_m", w_m), ("labels", labels), ("sample_info", info)],
    )
    true_count = int(labels.sum())
    print(
        f"wrote {len(samples)} samples ({true_count} true, {len(samples) - true_count} false) "
        f"to {args.out}"
    )
    return 0


def _load_samples(path):
    meta, tensors = load_container(path)
    if meta.get("format") != SAMPLES_FORMAT:
        raise FormatError(f"{path!r} is not a sample set (format {meta.get('format')!r})")
    if meta.get("version") != SAMPLES_VERSION:
        raise FormatError(f"unsupported sample-set version {meta.get('version')!r}")
    tensors = dict(tensors)
    return meta, tensors["w_u"], tensors["w_m"], tensors["labels"]


def _choose_specs(l, height, width, rows, feature_dim, arch: str):
    """Full reference architecture when the input fits, else a compact one."""
    if arch not in ("auto", "full", "compact"):
        raise ValidationError(f"arch must be auto, full or compact, got {arch!r}")

    def full():
        return (
            default_ultrasound_spec(l, height, width),
            default_audio_spec(rows, feature_dim),
        )

    def compact():
        ultra = StreamSpec(
            in_shape=(l, height, width),
            convs=[ConvSpec(8, 3, True), ConvSpec(16, 3, True)],
            fc=[64, 64],
        )
        audio = StreamSpec(
            in_shape=(1, rows, feature_dim),
            convs=[ConvSpec(8, 3, False), ConvSpec(16, 3, True)],
            fc=[64, 64],
        )
        ultra.feature_map_shape()
        audio.feature_map_shape()
        return ultra, audio

    if arch == "full":
        specs = full()
        specs[0].feature_map_shape()
        specs[1].feature_map_shape()
        return specs
    if arch == "compact":
        return compact()
    try:
        specs = full()
        specs[0].feature_map_shape()
        specs[1].feature_map_shape()
        return specs
    except ValidationError:
        return compact()


def _cmd_train(args, cfg: PipelineConfig) -> int:
    meta, w_u, w_m, labels = _load_samples(args.samples)
    _refuse_overwrite(args.out, args.overwrite)
    seed = cfg.seed if args.seed is None else args.seed
    train_cfg = TrainConfig(
        learning_rate=cfg.learning_rate,
        batch_size=cfg.batch_size,
        epochs=cfg.epochs if args.epochs is None else args.epochs,
        plateau_patience=cfg.plateau_patience,
        plateau_factor=cfg.plateau_factor,
        seed=seed,
    )
    val_fraction = cfg.validation_fraction if args.val_fraction is None else args.val_fraction
    if not 0 < val_fraction < 1:
        raise ValidationError("validation fraction must lie in (0, 1)")
    n = len(labels)
    if n < 2:
        raise EmptyDataError("need at least 2 samples to split train/validation")
    order = np.random.default_rng(seed).permutation(n)
    val_n = min(n - 1, max(1, round(n * val_fraction)))
    val_idx, train_idx = order[:val_n], order[val_n:]

    l, height, width = w_u.shape[1], w_u.shape[2], w_u.shape[3]
    rows, feature_dim = w_m.shape[1], w_m.shape[2]
    ultra_spec, audio_spec = _choose_specs(l, height, width, rows, feature_dim, args.arch)
    model = TwoStreamModel(ultra_spec, audio_spec, seed=seed)
    report = train_model(
        model,
        (w_u[train_idx], w_m[train_idx], labels[train_idx]),
        (w_u[val_idx], w_m[val_idx], labels[val_idx]),
        train_cfg,
    )
    save_model(model, args.out)
    for epoch in range(report.epochs_run):
        print(
            f"epoch {epoch + 1:3d}  train {report.train_losses[epoch]:.4f}  "
            f"val {report.val_losses[epoch]:.4f}  lr {report.learning_rates[epoch]:.2e}"
        )
    print(
        f"accuracy: train {report.accuracy['train']:.3f} "
        f"validation {report.accuracy['validation']:.3f}"
    )
    if args.report:
        os.makedirs(args.report, exist_ok=True)
        from .reporting import fig_loss_curves

        fig_loss_curves(report, os.path.join(args.report, "loss_curves.png"))
        with open(os.path.join(args.report, "training.tsv"), "w", encoding="utf-8") as fh:
            fh.write("epoch\ttrain_loss\tval_loss\tlearning_rate\n")
            for e in range(report.epochs_run):
                fh.write(
                    f"{e + 1}\t{report.train_losses[e]:.8f}\t"
                    f"{report.val_losses[e]:.8f}\t{report.learning_rates[e]:.3e}\n"
                )
    if report.diverged:
        raise NumericFailureError(
            f"training diverged after epoch {report.epochs_run}; "
            f"last good checkpoint saved to {args.out}"
        )
    print(f"saved model to {args.out}")
    return 0


def _cmd_sync(args, cfg: PipelineConfig) -> int:
    model = load_model(args.model)
    grid = parse_grid_spec(args.grid if args.grid else cfg.grid)
    ids = data_io.list_utterance_ids(args.input)
    if not ids:
        raise EmptyDataError(f"no utterances found under {args.input!r}")
    _refuse_overwrite(args.out, args.overwrite)

    def predict(uid: str):
        rec = data_io.load_utterance(args.input, uid)
        return synchronise(rec, model, grid)

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            predictions = list(pool.map(predict, ids))
    else:
        predictions = [predict(uid) for uid in ids]
    write_predictions(args.out, predictions)
    print(f"wrote {len(predictions)} predictions to {args.out}")
    return 0


def _cmd_evaluate(args, cfg: PipelineConfig) -> int:
    predictions = read_predictions(args.pred)
    if not predictions:
        raise EmptyDataError(f"{args.pred}: no predictions")
    truth = parse_truth_file(args.truth)
    missing = sorted(p.utterance_id for p in predictions if p.utterance_id not in truth)
    if missing:
        raise ValidationError(f"no truth offsets for utterances: {missing[:5]}")
    rows = []
    for p in predictions:
        t = truth[p.utterance_id]
        rows.append(
            EvalRow(
                utterance_id=p.utterance_id,
                prediction=p.predicted_offset,
                truth=t.offset_ms,
                dataset=t.dataset,
                type_code=t.type_code,
                speaker=t.speaker,
            )
        )
    groups = aggregate(rows, args.group)
    from .reporting import (
        fig_accuracy_by_group,
        fig_discrepancy_histogram,
        format_eval_table,
        write_groups_tsv,
        write_rows_tsv,
    )

    table = format_eval_table(groups, args.group)
    print(table, end="")
    if args.out:
        _refuse_overwrite(args.out, args.overwrite)
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "report.txt"), "w", encoding="utf-8") as fh:
            fh.write(table)
        write_groups_tsv(groups, os.path.join(args.out, "groups.tsv"))
        write_rows_tsv(rows, os.path.join(args.out, "rows.tsv"))
        fig_discrepancy_histogram(rows, os.path.join(args.out, "discrepancy_hist.png"))
        fig_accuracy_by_group(groups, os.path.join(args.out, "accuracy_by_group.png"))
        print(f"report written to {args.out}")
    return 0


def _load_offsets_from_predictions(path) -> dict:
    return {p.utterance_id: p.predicted_offset for p in read_predictions(path)}


def _cmd_experiment_build(args, cfg: PipelineConfig) -> int:
    _refuse_overwrite(args.out, args.overwrite)
    os.makedirs(args.out, exist_ok=True)
    seed = cfg.seed if args.seed is None else args.seed
    if args.kind == "threshold":
        pool = data_io.list_utterance_ids(args.data)
        plan = ThresholdPlan(
            participants=args.participants, shared_size=args.shared_size, seed=seed
        )
        experiment = build_threshold_experiment(pool, plan, experiment_id=args.name)
    else:
        if not args.pred or not args.hardware:
            raise UsageError("preference experiments need --pred and --hardware")
        predictions = _load_offsets_from_predictions(args.pred)
        hardware = {r.utterance_id: r.offset_ms for r in parse_truth_file(args.hardware).values()}
        if args.controls:
            with open(args.controls, "r", encoding="utf-8") as fh:
                control_pool = [line.strip() for line in fh if line.strip()]
        else:
            control_pool = []
        plan = PreferencePlan(
            participants=args.participants,
            tests_per_participant=args.tests,
            controls_per_participant=args.controls_per_participant,
            seed=seed,
        )
        experiment = build_preference_experiment(
            predictions, hardware, control_pool, plan, experiment_id=args.name
        )
    save_experiment(experiment, os.path.join(args.out, "experiment.json"))
    if not args.no_media:
        render_experiment_media(
            experiment,
            lambda uid: data_io.load_utterance(args.data, uid),
            os.path.join(args.out, "media"),
            frame_height=args.frame_height,
            frame_width=args.frame_width,
        )
    print(
        f"built {experiment.kind} experiment {experiment.experiment_id!r}: "
        f"{len(experiment.stimuli)} stimuli, {len(experiment.sessions)} sessions"
    )
    return 0


def _open_experiment(exp_dir):
    exp_path = os.path.join(exp_dir, "experiment.json")
    if not os.path.exists(exp_path):
        raise UsageError(f"{exp_dir!r} has no experiment.json")
    experiment = load_experiment(exp_path)
    store = EventStore(os.path.join(exp_dir, "events.jsonl"), experiment)
    return experiment, store


def _cmd_experiment_serve(args, cfg: PipelineConfig) -> int:
    import uvicorn

    experiment, store = _open_experiment(args.experiment)
    types = None
    if args.types:
        types = {
            r.utterance_id: r.type_code for r in parse_truth_file(args.types).values()
        }
    app = create_app(
        experiment, store, os.path.join(args.experiment, "media"), utterance_types=types
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _cmd_experiment_results(args, cfg: PipelineConfig) -> int:
    experiment, store = _open_experiment(args.experiment)
    types = None
    if args.types:
        types = {
            r.utterance_id: r.type_code for r in parse_truth_file(args.types).values()
        }
    results = experiment_results(
        experiment, store, utterance_types=types, allow_partial=args.allow_partial
    )
    text = json.dumps(results, indent=2, sort_keys=True)
    print(text)
    if args.out:
        _refuse_overwrite(args.out, args.overwrite)
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "results.json"), "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        from .reporting import fig_accuracy_by_error, fig_preference_by_participant

        if "per_error" in results:
            fig_accuracy_by_error(
                results["per_error"], os.path.join(args.out, "accuracy_by_error.png")
            )
        if "preference_per_participant" in results:
            fig_preference_by_participant(
                results["preference_per_participant"],
                os.path.join(args.out, "preference_by_participant.png"),
            )
        print(f"results written to {args.out}")
    return 0


def _cmd_stats(args, cfg: PipelineConfig) -> int:
    experiment, store = _open_experiment(args.experiment)
    from .experiment.results import _judgment_records

    records = [r for r in _judgment_records(experiment, store) if r.outcome is not None]
    if not records:
        raise EmptyDataError("no scoreable judgments in the store")
    prompts = {}
    for r in records:
        stim = experiment.stimuli[r.stimulus_id]
        if stim.utterance_id not in prompts:
            rec = data_io.load_utterance(args.data, stim.utterance_id)
            prompts[stim.utterance_id] = rec.prompt
    stim_prompts = {
        r.stimulus_id: prompts[experiment.stimuli[r.stimulus_id].utterance_id] for r in records
    }
    pronunciations = parse_pronunciation_dict(args.pronunciations)
    x, y, columns = build_design_matrix(records, stim_prompts, pronunciations)
    model = fit_logistic(x, y, l2_strength=args.l2)
    ll_model = -model.log_loss * len(y)
    ll_null = null_log_likelihood(y)
    r2 = mcfadden_r2(ll_model, ll_null) if ll_null < 0 else float("nan")
    summary = {
        "observations": len(y),
        "columns": len(columns),
        "l2_strength": args.l2,
        "converged": model.converged,
        "mean_log_loss": model.log_loss,
        "mcfadden_r2": r2,
        "weights": {c: model.weights[i] for i, c in enumerate(columns)},
    }
    text = json.dumps(summary, indent=2, sort_keys=True)
    print(text)
    if args.out:
        _refuse_overwrite(args.out, args.overwrite)
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="echosync", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"config file (default: ${CONFIG_ENV_VAR})")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", parents=[common], help="resample and resize a corpus")
    p.add_argument("--in", dest="input", required=True, help="raw utterance directory")
    p.add_argument("--out", required=True, help="preprocessed output directory")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--overwrite", action="store_true")
    p.set_defaults(func=_cmd_preprocess)

    p = sub.add_parser("make-samples", parents=[common], help="build self-supervision samples")
    p.add_argument("--in", dest="input", required=True, help="preprocessed utterance directory")
    p.add_argument("--out", required=True, help="sample container file")
    p.add_argument("--overwrite", action="store_true")
    p.set_defaults(func=_cmd_make_samples)

    p = sub.add_parser("train", parents=[common], help="train the embedding model")
    p.add_argument("--samples", required=True, help="sample container file")
    p.add_argument("--out", required=True, help="model checkpoint path")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--val-fraction", type=float, default=None)
    p.add_argument("--arch", default="auto", choices=("auto", "full", "compact"))
    p.add_argument("--report", help="directory for loss curves and tables")
    p.add_argument("--overwrite", action="store_true")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("sync", parents=[common], help="predict offsets for a corpus")
    p.add_argument("--model", required=True, help="model checkpoint")
    p.add_argument("--grid", default=None, help="min:max:step in seconds, or a preset name")
    p.add_argument("--in", dest="input", required=True, help="preprocessed utterance directory")
    p.add_argument("--out", required=True, help="predictions JSONL path")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--overwrite", action="store_true")
    p.set_defaults(func=_cmd_sync)

    p = sub.add_parser("evaluate", parents=[common], help="score predictions against truth")
    p.add_argument("--pred", required=True, help="predictions JSONL")
    p.add_argument("--truth", required=True, help="truth offsets TSV")
    p.add_argument("--group", default="dataset", choices=("dataset", "type", "speaker"))
    p.add_argument("--out", help="report directory (tables and figures)")
    p.add_argument("--overwrite", action="store_true")
    p.set_defaults(func=_cmd_evaluate)

    exp = sub.add_parser("experiment", help="perceptual experiment workflows")
    exp_sub = exp.add_subparsers(dest="experiment_command", required=True)

    p = exp_sub.add_parser("build", parents=[common], help="build an experiment")
    p.add_argument("--kind", required=True, choices=("threshold", "preference"))
    p.add_argument("--data", required=True, help="utterance directory for stimuli")
    p.add_argument("--out", required=True, help="experiment directory")
    p.add_argument("--name", default=None, help="experiment id")
    p.add_argument("--participants", type=int, default=None)
    p.add_argument("--shared-size", type=int, default=20)
    p.add_argument("--tests", type=int, default=50)
    p.add_argument("--controls-per-participant", type=int, default=10)
    p.add_argument("--pred", help="model predictions JSONL (preference)")
    p.add_argument("--hardware", help="hardware offsets TSV (preference)")
    p.add_argument("--controls", help="control utterance id list file (preference)")
    p.add_argument("--frame-height", type=int, default=240)
    p.add_argument("--frame-width", type=int, default=320)
    p.add_argument("--no-media", action="store_true", help="skip media rendering")
    p.add_argument("--overwrite", action="store_true")
    p.set_defaults(func=_cmd_experiment_build)

    p = exp_sub.add_parser("serve", parents=[common], help="serve participant sessions")
    p.add_argument("--experiment", required=True, help="experiment directory")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--types", help="utterance type TSV for result grouping")
    p.set_defaults(func=_cmd_experiment_serve)

    p = exp_sub.add_parser("results", parents=[common], help="analyse a judgment store")
    p.add_argument("--experiment", required=True, help="experiment directory")
    p.add_argument("--types", help="utterance type TSV for grouping")
    p.add_argument("--allow-partial", action="store_true")
    p.add_argument("--out", help="directory for results.json and figures")
    p.add_argument("--overwrite", action="store_true")
    p.set_defaults(func=_cmd_experiment_results)

    p = sub.add_parser("stats", parents=[common], help="regression analysis of judgments")
    p.add_argument("--experiment", required=True, help="experiment directory")
    p.add_argument("--data", required=True, help="utterance directory (prompts)")
    p.add_argument("--pronunciations", required=True, help="pronunciation dictionary")
    p.add_argument("--l2", type=float, default=1.0)
    p.add_argument("--out", help="summary JSON path")
    p.add_argument("--overwrite", action="store_true")
    p.set_defaults(func=_cmd_stats)

    return parser


def dispatch(argv: list) -> int:
    parser = build_parser()
    args = parser.parse_args(_merge_grid_values(list(argv)))
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "participants", None) is None and hasattr(args, "participants"):
        args.participants = 10 if getattr(args, "kind", "") == "threshold" else 6
    if getattr(args, "name", None) is None and hasattr(args, "name"):
        args.name = getattr(args, "kind", "experiment")
    return args.func(args, cfg)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        return dispatch(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except EchosyncError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except SystemExit as exc:
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
