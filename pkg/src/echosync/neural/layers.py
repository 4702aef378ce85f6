"""Network layers with explicit forward and backward passes.

Every layer keeps its learnable tensors in `params`, the matching
gradients (after backward) in `grads`, and non-learnable state such as
batch-norm running statistics in `buffers`. Convolutions use valid
padding with stride 1; pooling is 2x2 with stride 2, discarding odd
trailing rows/columns.
"""

from __future__ import annotations

import numpy as np

from ..errors import NumericFailureError, ShapeError


class Layer:
    """Base class; subclasses fill params/grads/buffers as needed."""

    def __init__(self, name: str, dtype=np.float32):
        self.name = name
        self.dtype = np.dtype(dtype)
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.buffers: dict[str, np.ndarray] = {}

    def forward(self, x: np.ndarray, training: bool) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _check_grads(self):
        for key, g in self.grads.items():
            if not np.all(np.isfinite(g)):
                raise NumericFailureError(f"non-finite gradient in {self.name}.{key}")


class Conv2D(Layer):
    """Valid-padding stride-1 convolution via im2col."""

    def __init__(self, name, in_channels, out_channels, kernel, rng, dtype=np.float32):
        super().__init__(name, dtype)
        kh, kw = (kernel, kernel) if isinstance(kernel, int) else kernel
        self.in_channels, self.out_channels = in_channels, out_channels
        self.kh, self.kw = kh, kw
        fan_in = in_channels * kh * kw
        limit = 1.0 / np.sqrt(fan_in)
        self.params["weight"] = rng.uniform(
            -limit, limit, size=(out_channels, in_channels, kh, kw)
        ).astype(self.dtype)
        self.params["bias"] = np.zeros(out_channels, dtype=self.dtype)
        self._cache = None

    def forward(self, x, training):
        x = np.ascontiguousarray(x, dtype=self.dtype)
        n, c, h, w = x.shape
        if c != self.in_channels:
            raise ShapeError(
                f"{self.name}: expected {self.in_channels} input channels, got {c}"
            )
        if h < self.kh or w < self.kw:
            raise ShapeError(f"{self.name}: input {h}x{w} smaller than kernel")
        oh, ow = h - self.kh + 1, w - self.kw + 1
        windows = np.lib.stride_tricks.sliding_window_view(x, (self.kh, self.kw), axis=(2, 3))
        cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(n, oh * ow, c * self.kh * self.kw)
        wmat = self.params["weight"].reshape(self.out_channels, -1)
        y = cols @ wmat.T + self.params["bias"]
        self._cache = (cols, x.shape, (oh, ow))
        return np.ascontiguousarray(y.transpose(0, 2, 1).reshape(n, self.out_channels, oh, ow))

    def backward(self, dy):
        cols, x_shape, (oh, ow) = self._cache
        n, c, h, w = x_shape
        dy_mat = dy.reshape(n, self.out_channels, oh * ow).transpose(0, 2, 1)
        wmat = self.params["weight"].reshape(self.out_channels, -1)
        dw = np.einsum("nio,nik->ok", dy_mat, cols, optimize=True)
        self.grads["weight"] = dw.reshape(self.params["weight"].shape)
        self.grads["bias"] = dy_mat.sum(axis=(0, 1))
        dcols = (dy_mat @ wmat).reshape(n, oh, ow, c, self.kh, self.kw)
        dx = np.zeros(x_shape, dtype=self.dtype)
        for i in range(self.kh):
            for j in range(self.kw):
                dx[:, :, i : i + oh, j : j + ow] += dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        self._check_grads()
        return dx


class BatchNorm(Layer):
    """Batch normalisation over (N, H, W) per channel, or over N per feature.

    `num_features` is the channel count for 4-d inputs or the feature
    count for 2-d inputs. Running estimates use momentum 0.1; epsilon
    1e-5. Inference mode normalises with the running statistics only,
    so outputs are independent of batch composition.
    """

    def __init__(self, name, num_features, momentum=0.1, eps=1e-5, dtype=np.float32):
        super().__init__(name, dtype)
        self.num_features = num_features
        self.momentum = momentum
        self.eps = eps
        self.params["gamma"] = np.ones(num_features, dtype=self.dtype)
        self.params["beta"] = np.zeros(num_features, dtype=self.dtype)
        self.buffers["running_mean"] = np.zeros(num_features, dtype=self.dtype)
        self.buffers["running_var"] = np.ones(num_features, dtype=self.dtype)
        self._cache = None

    def _axes_and_shape(self, x):
        if x.ndim == 4:
            return (0, 2, 3), (1, -1, 1, 1)
        if x.ndim == 2:
            return (0,), (1, -1)
        raise ShapeError(f"{self.name}: expected 2-d or 4-d input, got {x.ndim}-d")

    def forward(self, x, training):
        x = np.asarray(x, dtype=self.dtype)
        axes, bshape = self._axes_and_shape(x)
        feat_axis = 1
        if x.shape[feat_axis] != self.num_features:
            raise ShapeError(
                f"{self.name}: expected {self.num_features} features, got {x.shape[feat_axis]}"
            )
        gamma = self.params["gamma"].reshape(bshape)
        beta = self.params["beta"].reshape(bshape)
        if training:
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            m = self.dtype.type(self.momentum)
            self.buffers["running_mean"] = (1 - m) * self.buffers["running_mean"] + m * mean
            self.buffers["running_var"] = (1 - m) * self.buffers["running_var"] + m * var
            inv_std = 1.0 / np.sqrt(var + self.eps)
            xhat = (x - mean.reshape(bshape)) * inv_std.reshape(bshape)
            n_eff = x.size // self.num_features
            self._cache = (xhat, inv_std, axes, bshape, n_eff)
        else:
            mean = self.buffers["running_mean"]
            inv_std = 1.0 / np.sqrt(self.buffers["running_var"] + self.eps)
            xhat = (x - mean.reshape(bshape)) * inv_std.reshape(bshape)
            self._cache = None
        return gamma * xhat + beta

    def backward(self, dy):
        if self._cache is None:
            raise NumericFailureError(f"{self.name}: backward requires a training-mode forward")
        xhat, inv_std, axes, bshape, n_eff = self._cache
        gamma = self.params["gamma"].reshape(bshape)
        self.grads["gamma"] = (dy * xhat).sum(axis=axes)
        self.grads["beta"] = dy.sum(axis=axes)
        dxhat = dy * gamma
        # Canonical batch-norm input gradient in terms of xhat.
        sum_dxhat = dxhat.sum(axis=axes).reshape(bshape)
        sum_dxhat_xhat = (dxhat * xhat).sum(axis=axes).reshape(bshape)
        dx = (inv_std.reshape(bshape) / n_eff) * (
            n_eff * dxhat - sum_dxhat - xhat * sum_dxhat_xhat
        )
        self._check_grads()
        return dx.astype(self.dtype)


class ReLU(Layer):
    def __init__(self, name, dtype=np.float32):
        super().__init__(name, dtype)
        self._mask = None

    def forward(self, x, training):
        x = np.asarray(x, dtype=self.dtype)
        self._mask = x > 0
        return np.where(self._mask, x, self.dtype.type(0))

    def backward(self, dy):
        return np.where(self._mask, dy, self.dtype.type(0))


class MaxPool2D(Layer):
    """2x2 max pooling with stride 2; odd trailing rows/columns dropped."""

    def __init__(self, name, dtype=np.float32):
        super().__init__(name, dtype)
        self._cache = None

    def forward(self, x, training):
        x = np.asarray(x, dtype=self.dtype)
        n, c, h, w = x.shape
        oh, ow = h // 2, w // 2
        if oh < 1 or ow < 1:
            raise ShapeError(f"{self.name}: input {h}x{w} too small to pool")
        xc = x[:, :, : oh * 2, : ow * 2]
        tiles = xc.reshape(n, c, oh, 2, ow, 2).transpose(0, 1, 2, 4, 3, 5).reshape(
            n, c, oh, ow, 4
        )
        idx = tiles.argmax(axis=-1)
        y = np.take_along_axis(tiles, idx[..., None], axis=-1)[..., 0]
        self._cache = (idx, x.shape)
        return y

    def backward(self, dy):
        idx, x_shape = self._cache
        n, c, h, w = x_shape
        oh, ow = h // 2, w // 2
        dtiles = np.zeros((n, c, oh, ow, 4), dtype=self.dtype)
        np.put_along_axis(dtiles, idx[..., None], dy[..., None].astype(self.dtype), axis=-1)
        dx = np.zeros(x_shape, dtype=self.dtype)
        dx[:, :, : oh * 2, : ow * 2] = (
            dtiles.reshape(n, c, oh, ow, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(
                n, c, oh * 2, ow * 2
            )
        )
        return dx


class Flatten(Layer):
    def __init__(self, name, dtype=np.float32):
        super().__init__(name, dtype)
        self._shape = None

    def forward(self, x, training):
        self._shape = x.shape
        return np.ascontiguousarray(x).reshape(x.shape[0], -1)

    def backward(self, dy):
        return dy.reshape(self._shape)


class Dense(Layer):
    def __init__(self, name, in_features, out_features, rng, dtype=np.float32):
        super().__init__(name, dtype)
        self.in_features, self.out_features = in_features, out_features
        limit = 1.0 / np.sqrt(in_features)
        self.params["weight"] = rng.uniform(
            -limit, limit, size=(in_features, out_features)
        ).astype(self.dtype)
        self.params["bias"] = np.zeros(out_features, dtype=self.dtype)
        self._x = None

    def forward(self, x, training):
        x = np.asarray(x, dtype=self.dtype)
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ShapeError(
                f"{self.name}: expected (N, {self.in_features}) input, got {x.shape}"
            )
        self._x = x
        return x @ self.params["weight"] + self.params["bias"]

    def backward(self, dy):
        self.grads["weight"] = self._x.T @ dy
        self.grads["bias"] = dy.sum(axis=0)
        self._check_grads()
        return (dy @ self.params["weight"].T).astype(self.dtype)
