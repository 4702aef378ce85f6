"""Two-stream convolutional embedding network built on numpy.

Layers implement explicit forward/backward passes so gradients can be
verified against central finite differences; training runs in float32
with a float64 mirror available for the numeric checks.
"""

from .layers import BatchNorm, Conv2D, Dense, Flatten, MaxPool2D, ReLU
from .model import (
    CONTRASTIVE_MARGIN,
    ConvSpec,
    EmbeddingPair,
    StreamSpec,
    TwoStreamModel,
    classify,
    contrastive_loss,
    default_audio_spec,
    default_ultrasound_spec,
)
from .train import TrainConfig, TrainReport, evaluate_accuracy, train
from .checkpoint import load_model, save_model
from .gradcheck import check_layer, check_model, max_relative_error

__all__ = [
    "BatchNorm",
    "CONTRASTIVE_MARGIN",
    "Conv2D",
    "ConvSpec",
    "Dense",
    "EmbeddingPair",
    "Flatten",
    "MaxPool2D",
    "ReLU",
    "StreamSpec",
    "TrainConfig",
    "TrainReport",
    "TwoStreamModel",
    "check_layer",
    "check_model",
    "classify",
    "contrastive_loss",
    "default_audio_spec",
    "default_ultrasound_spec",
    "evaluate_accuracy",
    "load_model",
    "max_relative_error",
    "save_model",
    "train",
]
