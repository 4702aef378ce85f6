"""Central finite-difference verification of analytic gradients.

Checks run on float64 builds of the layers/model so truncation error
of the O(h^2) central difference dominates round-off. The error
measure is |a - n| / (|a| + |n| + 1): relative for gradients of large
magnitude, absolute for ordinary and vanishing ones. The unit floor
keeps the metric comparable to the step-1e-3 truncation error (~1e-6
absolute), which a tiny denominator would otherwise inflate past any
meaningful tolerance on near-zero gradients.
"""

from __future__ import annotations

import numpy as np

from .layers import Layer
from .model import TwoStreamModel, contrastive_loss

DEFAULT_STEP = 1e-3
ERROR_FLOOR = 1.0


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    return float(np.max(np.abs(a - n) / (np.abs(a) + np.abs(n) + ERROR_FLOOR)))


def _numeric_gradient(loss_fn, array: np.ndarray, h: float) -> np.ndarray:
    """Richardson-extrapolated central differences.

    Combining the step-h and step-h/2 central estimates cancels the
    O(h^2) truncation term, which otherwise dominates the comparison
    for sharply curved compositions (batch-norm into hinge losses) at
    the default step.
    """
    grad = np.zeros_like(array, dtype=np.float64)
    flat = array.reshape(-1)
    gflat = grad.reshape(-1)

    def central(i, orig, step):
        flat[i] = orig + step
        f_plus = loss_fn()
        flat[i] = orig - step
        f_minus = loss_fn()
        flat[i] = orig
        return (f_plus - f_minus) / (2 * step)

    for i in range(flat.size):
        orig = flat[i]
        d_h = central(i, orig, h)
        d_half = central(i, orig, h / 2)
        gflat[i] = (4.0 * d_half - d_h) / 3.0
    return grad


def check_layer(layer: Layer, x: np.ndarray, rng, h: float = DEFAULT_STEP) -> float:
    """Max error over input and parameter gradients of a single layer.

    The layer output is reduced to a scalar by a fixed random
    projection so every output element influences the loss.
    """
    x = np.asarray(x, dtype=np.float64)
    y0 = layer.forward(x, training=True)
    proj = rng.standard_normal(y0.shape)

    def loss_fn():
        return float(np.sum(layer.forward(x, training=True) * proj))

    loss_fn()
    dx = layer.backward(proj)
    analytic = {key: layer.grads[key].copy() for key in layer.params}
    worst = max_relative_error(dx, _numeric_gradient(loss_fn, x, h))
    for key in layer.params:
        numeric = _numeric_gradient(loss_fn, layer.params[key], h)
        worst = max(worst, max_relative_error(analytic[key], numeric))
    return worst


def check_model(
    model: TwoStreamModel,
    w_u: np.ndarray,
    w_m: np.ndarray,
    y: np.ndarray,
    h: float = DEFAULT_STEP,
) -> float:
    """Max error over every parameter of the full two-stream model."""
    if model.dtype != np.float64:
        raise ValueError("gradient checks require a float64 model")

    def loss_fn():
        v_u = model.embed_ultrasound(w_u, training=True)
        v_m = model.embed_audio(w_m, training=True)
        d = np.sqrt(((v_u - v_m) ** 2).sum(axis=1))
        return contrastive_loss(d, y)

    model.training_step(w_u, w_m, y)
    analytic = {name: layer.grads[key].copy() for name, layer, key in model.named_parameters()}
    buffers = {
        f"{layer.name}.{key}": arr.copy()
        for layer in model.layers()
        for key, arr in layer.buffers.items()
    }
    worst = 0.0
    for name, layer, key in model.named_parameters():
        numeric = _numeric_gradient(loss_fn, layer.params[key], h)
        worst = max(worst, max_relative_error(analytic[name], numeric))
    for layer in model.layers():
        for key in layer.buffers:
            layer.buffers[key] = buffers[f"{layer.name}.{key}"]
    return worst
