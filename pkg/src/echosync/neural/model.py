"""Two-stream embedding model, contrastive loss and pair classification.

Each stream maps its window to a 64-dim embedding; matching windows are
trained toward distance 0 and mismatched windows beyond a margin of 1.
A pair is classified true when the embedding distance falls below 0.5
(the boundary itself classifies as false).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeError, ValidationError
from .layers import BatchNorm, Conv2D, Dense, Flatten, Layer, MaxPool2D, ReLU

CONTRASTIVE_MARGIN = 1.0
EMBEDDING_DIM = 64


@dataclass
class ConvSpec:
    out_channels: int
    kernel: int
    pool: bool

    def to_dict(self):
        return {"out_channels": self.out_channels, "kernel": self.kernel, "pool": self.pool}

    @classmethod
    def from_dict(cls, d):
        return cls(out_channels=d["out_channels"], kernel=d["kernel"], pool=d["pool"])


@dataclass
class StreamSpec:
    """Input shape (channels, height, width) plus conv and FC layout.

    Every conv and FC layer is followed by batch-norm then ReLU;
    max-pool (2x2, stride 2) follows the activation where `pool` is set.
    """

    in_shape: tuple
    convs: list = field(default_factory=list)
    fc: list = field(default_factory=list)

    def __post_init__(self):
        self.in_shape = tuple(int(v) for v in self.in_shape)
        if len(self.in_shape) != 3:
            raise ValidationError("in_shape must be (channels, height, width)")
        if not self.fc:
            raise ValidationError("stream needs at least one FC layer")

    def feature_map_shape(self) -> tuple:
        """(channels, height, width) after the conv stack."""
        c, h, w = self.in_shape
        for conv in self.convs:
            h, w = h - conv.kernel + 1, w - conv.kernel + 1
            if h < 1 or w < 1:
                raise ValidationError(f"conv reduces feature map to {h}x{w}")
            c = conv.out_channels
            if conv.pool:
                h, w = h // 2, w // 2
                if h < 1 or w < 1:
                    raise ValidationError(f"pool reduces feature map to {h}x{w}")
        return c, h, w

    def to_dict(self):
        return {
            "in_shape": list(self.in_shape),
            "convs": [c.to_dict() for c in self.convs],
            "fc": list(self.fc),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            in_shape=tuple(d["in_shape"]),
            convs=[ConvSpec.from_dict(c) for c in d["convs"]],
            fc=list(d["fc"]),
        )


def default_ultrasound_spec(
    l: int = 5, height: int = 63, width: int = 138, embedding_dim: int = EMBEDDING_DIM
) -> StreamSpec:
    return StreamSpec(
        in_shape=(l, height, width),
        convs=[ConvSpec(23, 5, True), ConvSpec(64, 5, True), ConvSpec(128, 5, True)],
        fc=[embedding_dim, embedding_dim],
    )


def default_audio_spec(
    rows: int = 20, feature_dim: int = 30, embedding_dim: int = EMBEDDING_DIM
) -> StreamSpec:
    return StreamSpec(
        in_shape=(1, rows, feature_dim),
        convs=[ConvSpec(23, 3, False), ConvSpec(64, 3, True), ConvSpec(128, 3, True)],
        fc=[embedding_dim, embedding_dim],
    )


def _build_stream(prefix: str, spec: StreamSpec, rng, dtype) -> list[Layer]:
    layers: list[Layer] = []
    c, h, w = spec.in_shape
    for i, conv in enumerate(spec.convs, start=1):
        layers.append(Conv2D(f"{prefix}.conv{i}", c, conv.out_channels, conv.kernel, rng, dtype))
        layers.append(BatchNorm(f"{prefix}.bn{i}", conv.out_channels, dtype=dtype))
        layers.append(ReLU(f"{prefix}.relu{i}", dtype))
        c, h, w = conv.out_channels, h - conv.kernel + 1, w - conv.kernel + 1
        if conv.pool:
            layers.append(MaxPool2D(f"{prefix}.pool{i}", dtype))
            h, w = h // 2, w // 2
    layers.append(Flatten(f"{prefix}.flatten", dtype))
    features = c * h * w
    for i, units in enumerate(spec.fc, start=1):
        layers.append(Dense(f"{prefix}.fc{i}", features, units, rng, dtype))
        layers.append(BatchNorm(f"{prefix}.fcbn{i}", units, dtype=dtype))
        layers.append(ReLU(f"{prefix}.fcrelu{i}", dtype))
        features = units
    return layers


@dataclass
class EmbeddingPair:
    v_u: np.ndarray
    v_m: np.ndarray
    d: float

    def __post_init__(self):
        expected = float(np.linalg.norm(np.asarray(self.v_u, dtype=np.float64) - self.v_m))
        if abs(self.d - expected) > 1e-6 * max(1.0, expected):
            raise ValidationError(f"d={self.d} does not match embedding distance {expected}")


class TwoStreamModel:
    """Paired ultrasound/audio embedding streams with a mode flag.

    Inference mode uses batch-norm running statistics, making outputs
    deterministic and independent of batch composition; training mode
    uses batch statistics and caches activations for backward.
    """

    def __init__(
        self,
        ultrasound_spec: StreamSpec | None = None,
        audio_spec: StreamSpec | None = None,
        seed: int = 0,
        dtype=np.float32,
    ):
        self.ultrasound_spec = ultrasound_spec or default_ultrasound_spec()
        self.audio_spec = audio_spec or default_audio_spec()
        if self.ultrasound_spec.fc[-1] != self.audio_spec.fc[-1]:
            raise ValidationError("streams must share the embedding dimension")
        self.dtype = np.dtype(dtype)
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.ultra_layers = _build_stream("ultra", self.ultrasound_spec, rng, self.dtype)
        self.audio_layers = _build_stream("audio", self.audio_spec, rng, self.dtype)
        self.mode = "inference"

    @property
    def window_frames(self) -> int:
        return self.ultrasound_spec.in_shape[0]

    @property
    def feature_dim(self) -> int:
        return self.audio_spec.in_shape[2]

    @property
    def embedding_dim(self) -> int:
        return self.ultrasound_spec.fc[-1]

    def set_mode(self, mode: str):
        if mode not in ("training", "inference"):
            raise ValidationError(f"unknown mode {mode!r}")
        self.mode = mode

    def layers(self) -> list[Layer]:
        return self.ultra_layers + self.audio_layers

    def named_parameters(self):
        for layer in self.layers():
            for key in layer.params:
                yield f"{layer.name}.{key}", layer, key

    def _check_input(self, stream: str, x: np.ndarray, in_shape: tuple):
        if x.shape[1:] != in_shape:
            raise ShapeError(
                f"{stream} stream expects input shape {in_shape}, got {tuple(x.shape[1:])}"
            )

    def embed_ultrasound(self, batch: np.ndarray, training: bool | None = None) -> np.ndarray:
        training = self.mode == "training" if training is None else training
        x = np.asarray(batch, dtype=self.dtype)
        self._check_input("ultrasound", x, self.ultrasound_spec.in_shape)
        for layer in self.ultra_layers:
            x = layer.forward(x, training)
        return x

    def embed_audio(self, batch: np.ndarray, training: bool | None = None) -> np.ndarray:
        training = self.mode == "training" if training is None else training
        x = np.asarray(batch, dtype=self.dtype)
        if x.ndim == 3:
            x = x[:, None, :, :]
        self._check_input("audio", x, self.audio_spec.in_shape)
        for layer in self.audio_layers:
            x = layer.forward(x, training)
        return x

    def forward_batch(self, w_u: np.ndarray, w_m: np.ndarray, training: bool | None = None):
        """Embeddings and distances for aligned batches: (v_u, v_m, d)."""
        v_u = self.embed_ultrasound(w_u, training)
        v_m = self.embed_audio(w_m, training)
        diff = v_u.astype(np.float64) - v_m.astype(np.float64)
        d = np.sqrt((diff * diff).sum(axis=1))
        return v_u, v_m, d

    def forward(self, w_u: np.ndarray, w_m: np.ndarray) -> EmbeddingPair:
        """Single window pair to EmbeddingPair, in the current mode."""
        v_u, v_m, d = self.forward_batch(
            np.asarray(w_u)[None], np.asarray(w_m)[None]
        )
        return EmbeddingPair(v_u=v_u[0], v_m=v_m[0], d=float(d[0]))

    def backward_streams(self, d_vu: np.ndarray, d_vm: np.ndarray):
        """Propagate embedding gradients back through both streams."""
        g = d_vu
        for layer in reversed(self.ultra_layers):
            g = layer.backward(g)
        g = d_vm
        for layer in reversed(self.audio_layers):
            g = layer.backward(g)

    def training_step(self, w_u: np.ndarray, w_m: np.ndarray, y: np.ndarray) -> float:
        """Forward in training mode, contrastive loss, full backward.

        Populates every layer's grads; returns the batch loss. A
        non-finite loss (diverged weights or poisoned inputs) skips the
        backward pass and is returned as-is for the caller to handle.
        """
        with np.errstate(over="ignore", invalid="ignore"):
            v_u = self.embed_ultrasound(w_u, training=True)
            v_m = self.embed_audio(w_m, training=True)
            diff = v_u - v_m
            d = np.sqrt((diff.astype(np.float64) ** 2).sum(axis=1))
            loss = contrastive_loss(d, y)
            if not np.isfinite(loss):
                return loss
            n = len(d)
            y = np.asarray(y, dtype=np.float64)
            hinge = np.maximum(CONTRASTIVE_MARGIN - d, 0.0)
            dl_dd = (2.0 / n) * (y * d - (1.0 - y) * hinge)
            # diff is the zero vector wherever d = 0, so the guarded
            # divisor never changes a nonzero gradient.
            denom = np.where(d > 0, d, 1.0)
            d_vu = ((dl_dd / denom)[:, None] * diff).astype(self.dtype)
            self.backward_streams(d_vu, -d_vu)
        return loss


def contrastive_loss(distances: np.ndarray, labels: np.ndarray) -> float:
    """Mean of y*d^2 + (1-y)*max(margin - d, 0)^2 over the batch."""
    d = np.asarray(distances, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if d.size == 0:
        raise ValidationError("contrastive loss of an empty batch is undefined")
    if d.shape != y.shape:
        raise ValidationError(f"distances {d.shape} and labels {y.shape} differ in shape")
    if np.any(d < 0):
        raise ValidationError("distances must be nonnegative")
    if not np.all((y == 0) | (y == 1)):
        raise ValidationError("labels must be 0 or 1")
    hinge = np.maximum(CONTRASTIVE_MARGIN - d, 0.0)
    return float(np.mean(y * d * d + (1.0 - y) * hinge * hinge))


def classify(d: float, threshold: float = 0.5) -> bool:
    """True-pair iff d < threshold; the boundary counts as false."""
    if d < 0:
        raise ValidationError("distance must be nonnegative")
    return d < threshold
