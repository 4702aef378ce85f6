"""Model checkpointing on the versioned binary tensor container.

The header records the format version and both stream layouts; tensors
follow in layer declaration order (parameters, then batch-norm running
statistics). Loading rebuilds the model from the recorded specs, so a
round trip reproduces every tensor bit-exactly and a load-then-save
rewrites the identical file.
"""

from __future__ import annotations

import numpy as np

from ..container import load_container, save_container
from ..errors import FormatError
from .model import StreamSpec, TwoStreamModel

MODEL_FORMAT = "two-stream-model"
MODEL_VERSION = 1


def _tensor_items(model: TwoStreamModel):
    for layer in model.layers():
        for key, arr in layer.params.items():
            yield f"{layer.name}.{key}", arr
        for key, arr in layer.buffers.items():
            yield f"{layer.name}.{key}", arr


def save_model(model: TwoStreamModel, path):
    meta = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "dtype": model.dtype.name,
        "seed": model.seed,
        "ultrasound_spec": model.ultrasound_spec.to_dict(),
        "audio_spec": model.audio_spec.to_dict(),
    }
    save_container(path, meta, list(_tensor_items(model)))


def load_model(path) -> TwoStreamModel:
    """Rebuild a model from a checkpoint; always loads in inference mode."""
    meta, tensors = load_container(path)
    if meta.get("format") != MODEL_FORMAT:
        raise FormatError(f"not a model checkpoint: format {meta.get('format')!r}")
    if meta.get("version") != MODEL_VERSION:
        raise FormatError(
            f"unsupported checkpoint version {meta.get('version')!r}, expected {MODEL_VERSION}"
        )
    model = TwoStreamModel(
        ultrasound_spec=StreamSpec.from_dict(meta["ultrasound_spec"]),
        audio_spec=StreamSpec.from_dict(meta["audio_spec"]),
        seed=meta.get("seed", 0),
        dtype=np.dtype(meta["dtype"]),
    )
    stored = dict(tensors)
    expected = [name for name, _ in _tensor_items(model)]
    missing = [n for n in expected if n not in stored]
    surplus = [n for n in stored if n not in set(expected)]
    if missing or surplus:
        raise FormatError(
            f"checkpoint tensors do not match the declared architecture "
            f"(missing {missing[:3]}, surplus {surplus[:3]})"
        )
    for layer in model.layers():
        for key in layer.params:
            arr = stored[f"{layer.name}.{key}"]
            if arr.shape != layer.params[key].shape:
                raise FormatError(f"tensor {layer.name}.{key} has shape {arr.shape}")
            layer.params[key] = arr.astype(model.dtype)
        for key in layer.buffers:
            layer.buffers[key] = stored[f"{layer.name}.{key}"].astype(model.dtype)
    model.set_mode("inference")
    return model
