"""Pipeline configuration with a flat key=value file format.

Defaults mirror the reference training setup: 24 fps ultrasound,
22.05 kHz audio, 63x138 frames, 5-frame windows, 30-column MFCC
matrices, learning rate 0.001, batch size 64, 20 epochs with plateau
patience 2 and factor 0.1. The config file is deliberately flat (one
`key = value` per line) so diffs stay reviewable.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields

from .dsp import MfccConfig
from .errors import UsageError, ValidationError
from .neural import TrainConfig
from .sync import NAMED_GRIDS, CandidateGrid, build_grid

CONFIG_ENV_VAR = "ECHOSYNC_CONFIG"


@dataclass
class PipelineConfig:
    target_fps: float = 24.0
    target_sample_rate: float = 22050.0
    frame_height: int = 63
    frame_width: int = 138
    window_frames: int = 5
    feature_dim: int = 30
    mfcc_coefficients: int = 13
    mel_filters: int = 26
    learning_rate: float = 0.001
    batch_size: int = 64
    epochs: int = 20
    plateau_patience: int = 2
    plateau_factor: float = 0.1
    validation_fraction: float = 0.1
    grid: str = "cleft"
    boundary: str = "hard"
    seed: int = 0

    def __post_init__(self):
        if self.boundary not in ("hard", "soft"):
            raise ValidationError(f"boundary must be hard or soft, got {self.boundary!r}")
        if not 0 < self.validation_fraction < 1:
            raise ValidationError("validation_fraction must lie in (0, 1)")

    def mfcc_config(self) -> MfccConfig:
        return MfccConfig.for_window(
            self.window_frames,
            self.target_fps,
            num_coefficients=self.mfcc_coefficients,
            num_mel_filters=self.mel_filters,
            feature_dim=self.feature_dim,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            epochs=self.epochs,
            plateau_patience=self.plateau_patience,
            plateau_factor=self.plateau_factor,
            seed=self.seed,
        )

    def candidate_grid(self) -> CandidateGrid:
        return parse_grid_spec(self.grid)


def parse_grid_spec(spec: str) -> CandidateGrid:
    """`min:max:step` in seconds, or a named preset such as `cleft`."""
    name = spec.strip().lower()
    if name in NAMED_GRIDS:
        return NAMED_GRIDS[name]
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValidationError(
            f"grid spec must be min:max:step in seconds or one of "
            f"{sorted(NAMED_GRIDS)}, got {spec!r}"
        )
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError as exc:
        raise ValidationError(f"grid spec {spec!r} has a non-numeric part") from exc
    return build_grid(lo, hi, step)


def parse_config_text(text: str, source: str = "<config>") -> PipelineConfig:
    known = {f.name: f.type for f in fields(PipelineConfig)}
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValidationError(f"{source} line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in known:
            raise ValidationError(f"{source} line {lineno}: unknown key {key!r}")
        if key in values:
            raise ValidationError(f"{source} line {lineno}: duplicate key {key!r}")
        target = PipelineConfig.__dataclass_fields__[key].type
        try:
            if target in ("int",):
                values[key] = int(value)
            elif target in ("float",):
                values[key] = float(value)
            else:
                values[key] = value
        except ValueError as exc:
            raise ValidationError(
                f"{source} line {lineno}: {key} expects {target}, got {value!r}"
            ) from exc
    return PipelineConfig(**values)


def load_config(path=None) -> PipelineConfig:
    """Load `path`, else the file named by ECHOSYNC_CONFIG, else defaults."""
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR) or None
    if path is None:
        return PipelineConfig()
    if not os.path.exists(path):
        raise UsageError(f"config file {path!r} does not exist")
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), source=str(path))


def format_config(cfg: PipelineConfig) -> str:
    lines = [f"{f.name} = {getattr(cfg, f.name)}" for f in fields(PipelineConfig)]
    return "\n".join(lines) + "\n"
