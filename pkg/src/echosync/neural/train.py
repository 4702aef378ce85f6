"""Adam training loop with plateau-driven learning-rate reduction.

Validation loss is measured in inference mode after each epoch. When it
fails to improve by at least `improvement_epsilon` for
`plateau_patience` consecutive epochs, the learning rate is multiplied
by `plateau_factor`. Divergence (a non-finite batch loss, validation
loss or gradient) aborts training and restores the parameters saved
after the last clean epoch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericFailureError, ValidationError
from .model import TwoStreamModel, classify, contrastive_loss

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 64
    epochs: int = 20
    plateau_patience: int = 2
    plateau_factor: float = 0.1
    improvement_epsilon: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size <= 0 or self.epochs <= 0:
            raise ValidationError("learning_rate, batch_size and epochs must be positive")
        if self.plateau_patience <= 0:
            raise ValidationError("plateau_patience must be positive")
        if not 0 < self.plateau_factor < 1:
            raise ValidationError("plateau_factor must lie in (0, 1)")
        if self.improvement_epsilon <= 0:
            raise ValidationError("improvement_epsilon must be positive")


@dataclass
class TrainReport:
    train_losses: list = field(default_factory=list)
    val_losses: list = field(default_factory=list)
    learning_rates: list = field(default_factory=list)
    accuracy: dict = field(default_factory=dict)
    diverged: bool = False
    epochs_run: int = 0


def stack_samples(samples) -> tuple:
    """(w_u, w_m, y) arrays from a list of TrainingSample."""
    if not samples:
        raise ValidationError("sample set is empty")
    w_u = np.stack([s.pair.w_u for s in samples])
    w_m = np.stack([s.pair.w_m for s in samples])
    y = np.array([s.label for s in samples], dtype=np.int64)
    return w_u, w_m, y


def _as_arrays(dataset) -> tuple:
    if isinstance(dataset, tuple):
        w_u, w_m, y = dataset
        if len(w_u) == 0:
            raise ValidationError("sample set is empty")
        return np.asarray(w_u), np.asarray(w_m), np.asarray(y)
    return stack_samples(dataset)


def _snapshot(model: TwoStreamModel) -> dict:
    state = {}
    for layer in model.layers():
        for key, arr in layer.params.items():
            state[f"{layer.name}.{key}"] = arr.copy()
        for key, arr in layer.buffers.items():
            state[f"{layer.name}.{key}"] = arr.copy()
    return state


def _restore(model: TwoStreamModel, state: dict):
    for layer in model.layers():
        for key in layer.params:
            layer.params[key] = state[f"{layer.name}.{key}"].copy()
        for key in layer.buffers:
            layer.buffers[key] = state[f"{layer.name}.{key}"].copy()


def evaluate_loss(model: TwoStreamModel, dataset, batch_size: int = 64) -> float:
    """Contrastive loss over a whole set, inference mode, fixed order."""
    w_u, w_m, y = _as_arrays(dataset)
    distances = predict_distances(model, w_u, w_m, batch_size)
    return contrastive_loss(distances, y)


def predict_distances(
    model: TwoStreamModel, w_u: np.ndarray, w_m: np.ndarray, batch_size: int = 64
) -> np.ndarray:
    out = []
    for lo in range(0, len(w_u), batch_size):
        _, _, d = model.forward_batch(
            w_u[lo : lo + batch_size], w_m[lo : lo + batch_size], training=False
        )
        out.append(d)
    return np.concatenate(out)


def evaluate_accuracy(
    model: TwoStreamModel, dataset, threshold: float = 0.5, batch_size: int = 64
) -> float:
    """Fraction of samples whose d < threshold verdict matches the label."""
    w_u, w_m, y = _as_arrays(dataset)
    d = predict_distances(model, w_u, w_m, batch_size)
    predicted = np.array([classify(v, threshold) for v in d])
    return float(np.mean(predicted == (y == 1)))


def train(
    model: TwoStreamModel,
    train_set,
    val_set,
    cfg: TrainConfig,
    test_set=None,
) -> TrainReport:
    """Seeded Adam training; returns the per-epoch report.

    Shuffling, batch order and summation order are fixed by cfg.seed,
    so repeated runs produce identical parameters.
    """
    train_u, train_m, train_y = _as_arrays(train_set)
    val_data = _as_arrays(val_set)

    rng = np.random.default_rng(cfg.seed)
    adam_m: dict[str, np.ndarray] = {}
    adam_v: dict[str, np.ndarray] = {}
    for name, layer, key in model.named_parameters():
        adam_m[name] = np.zeros_like(layer.params[key])
        adam_v[name] = np.zeros_like(layer.params[key])
    step = 0

    report = TrainReport()
    lr = cfg.learning_rate
    best_val = math.inf
    stale_epochs = 0
    last_good = _snapshot(model)
    n = len(train_u)

    model.set_mode("training")
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        batch_losses = []
        clean = True
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo : lo + cfg.batch_size]
            try:
                loss = model.training_step(train_u[idx], train_m[idx], train_y[idx])
            except NumericFailureError:
                # Non-finite gradients are the same failure mode as a
                # non-finite loss: diverged numbers somewhere upstream.
                clean = False
                break
            if not math.isfinite(loss):
                clean = False
                break
            batch_losses.append(loss)
            step += 1
            bias1 = 1.0 - ADAM_BETA1**step
            bias2 = 1.0 - ADAM_BETA2**step
            for name, layer, key in model.named_parameters():
                g = layer.grads[key]
                adam_m[name] = ADAM_BETA1 * adam_m[name] + (1 - ADAM_BETA1) * g
                adam_v[name] = ADAM_BETA2 * adam_v[name] + (1 - ADAM_BETA2) * (g * g)
                update = (adam_m[name] / bias1) / (np.sqrt(adam_v[name] / bias2) + ADAM_EPS)
                layer.params[key] -= (lr * update).astype(layer.params[key].dtype)

        if clean:
            val_loss = evaluate_loss(model, val_data, cfg.batch_size)
            model.set_mode("training")
            if not math.isfinite(val_loss):
                clean = False
        if not clean:
            _restore(model, last_good)
            report.diverged = True
            break

        report.train_losses.append(float(np.mean(batch_losses)))
        report.val_losses.append(float(val_loss))
        report.learning_rates.append(lr)
        report.epochs_run = epoch
        last_good = _snapshot(model)

        if val_loss < best_val - cfg.improvement_epsilon:
            best_val = val_loss
            stale_epochs = 0
        else:
            stale_epochs += 1
            if stale_epochs >= cfg.plateau_patience:
                lr *= cfg.plateau_factor
                stale_epochs = 0

    model.set_mode("inference")
    report.accuracy["train"] = evaluate_accuracy(model, (train_u, train_m, train_y))
    report.accuracy["validation"] = evaluate_accuracy(model, val_data)
    if test_set is not None:
        report.accuracy["test"] = evaluate_accuracy(model, _as_arrays(test_set))
    return report
