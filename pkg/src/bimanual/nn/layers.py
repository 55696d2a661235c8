"""Minimal layer zoo with exact analytic backward passes.

Layouts: dense inputs are (B, n); conv inputs are (B, H, W, C) with weights
(kh, kw, cin, cout). Each layer caches what its backward pass needs, so a
net instance is exclusive to one forward/backward pair at a time.
"""

from __future__ import annotations

import io
import json

import numpy as np


class ShapeError(Exception):
    pass


class Layer:
    has_params = False

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> list[np.ndarray]:
        return []

    def grads(self) -> list[np.ndarray]:
        return []

    def zero_grad(self) -> None:
        for g in self.grads():
            g.fill(0.0)

    def spec(self) -> dict:
        return {"kind": type(self).__name__}


class Dense(Layer):
    has_params = True

    def __init__(self, n_in: int, n_out: int, rng=None, dtype=np.float32,
                 bias_init: float = 0.0):
        self.n_in, self.n_out = n_in, n_out
        if rng is None:
            self.w = np.zeros((n_in, n_out), dtype=dtype)
        else:
            scale = np.sqrt(2.0 / n_in)
            self.w = (rng.standard_normal((n_in, n_out)) * scale).astype(dtype)
        self.b = np.full(n_out, bias_init, dtype=dtype)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)
        self._x = None

    def forward(self, x):
        if x.ndim != 2 or x.shape[1] != self.n_in:
            raise ShapeError(f"dense expected (B, {self.n_in}), got {x.shape}")
        self._x = x
        return x @ self.w + self.b

    def backward(self, grad):
        self.dw += self._x.T @ grad
        self.db += grad.sum(axis=0)
        return grad @ self.w.T

    def params(self):
        return [self.w, self.b]

    def grads(self):
        return [self.dw, self.db]

    def spec(self):
        return {"kind": "Dense", "n_in": self.n_in, "n_out": self.n_out}


class Conv2d(Layer):
    has_params = True

    def __init__(self, c_in: int, c_out: int, kernel: int = 3, stride: int = 1,
                 pad: int = 1, rng=None, dtype=np.float32):
        self.c_in, self.c_out = c_in, c_out
        self.kernel, self.stride, self.pad = kernel, stride, pad
        fan_in = kernel * kernel * c_in
        if rng is None:
            self.w = np.zeros((kernel, kernel, c_in, c_out), dtype=dtype)
        else:
            scale = np.sqrt(2.0 / fan_in)
            self.w = (rng.standard_normal((kernel, kernel, c_in, c_out)) * scale).astype(dtype)
        self.b = np.zeros(c_out, dtype=dtype)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)
        self._cols = None
        self._x_shape = None

    def _out_hw(self, h, w):
        k, s, p = self.kernel, self.stride, self.pad
        return (h + 2 * p - k) // s + 1, (w + 2 * p - k) // s + 1

    def forward(self, x):
        if x.ndim != 4 or x.shape[3] != self.c_in:
            raise ShapeError(f"conv expected (B, H, W, {self.c_in}), got {x.shape}")
        k, s, p = self.kernel, self.stride, self.pad
        if p:
            x = np.pad(x, ((0, 0), (p, p), (p, p), (0, 0)))
        b, h, w, c = x.shape
        oh, ow = (h - k) // s + 1, (w - k) // s + 1
        shape = (b, oh, ow, k, k, c)
        strides = (x.strides[0], x.strides[1] * s, x.strides[2] * s,
                   x.strides[1], x.strides[2], x.strides[3])
        cols = np.lib.stride_tricks.as_strided(x, shape, strides)
        cols = np.ascontiguousarray(cols).reshape(b * oh * ow, k * k * c)
        self._cols = cols
        self._x_shape = (b, h, w, c)
        out = cols @ self.w.reshape(-1, self.c_out) + self.b
        return out.reshape(b, oh, ow, self.c_out)

    def backward(self, grad):
        b, h, w, c = self._x_shape
        k, s, p = self.kernel, self.stride, self.pad
        oh, ow = (h - k) // s + 1, (w - k) // s + 1
        gflat = grad.reshape(b * oh * ow, self.c_out)
        self.dw += (self._cols.T @ gflat).reshape(self.w.shape)
        self.db += gflat.sum(axis=0)
        dcols = (gflat @ self.w.reshape(-1, self.c_out).T).reshape(b, oh, ow, k, k, c)
        dx_pad = np.zeros((b, h, w, c), dtype=grad.dtype)
        for i in range(k):
            for j in range(k):
                dx_pad[:, i:i + oh * s:s, j:j + ow * s:s, :] += dcols[:, :, :, i, j, :]
        if p:
            return dx_pad[:, p:-p, p:-p, :]
        return dx_pad

    def params(self):
        return [self.w, self.b]

    def grads(self):
        return [self.dw, self.db]

    def spec(self):
        return {"kind": "Conv2d", "c_in": self.c_in, "c_out": self.c_out,
                "kernel": self.kernel, "stride": self.stride, "pad": self.pad}


class ReLU(Layer):
    def forward(self, x):
        self._mask = x > 0
        return x * self._mask

    def backward(self, grad):
        return grad * self._mask


class Sigmoid(Layer):
    def forward(self, x):
        self._y = 1.0 / (1.0 + np.exp(-x))
        return self._y

    def backward(self, grad):
        return grad * self._y * (1.0 - self._y)


class Flatten(Layer):
    def forward(self, x):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        return grad.reshape(self._shape)


_LAYER_KINDS = {"Dense": Dense, "Conv2d": Conv2d, "ReLU": ReLU,
                "Sigmoid": Sigmoid, "Flatten": Flatten}


class Net:
    """Ordered layer stack with sequential forward/backward."""

    def __init__(self, layers: list[Layer]):
        self.layers = layers

    def forward(self, x: np.ndarray) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, grad: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def params(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.params()]

    def grads(self) -> list[np.ndarray]:
        return [g for layer in self.layers for g in layer.grads()]

    def zero_grad(self) -> None:
        for layer in self.layers:
            layer.zero_grad()

    # -- checkpointing -------------------------------------------------

    CHECKPOINT_VERSION = 1

    def save(self, path) -> None:
        spec = {"version": self.CHECKPOINT_VERSION,
                "layers": [layer.spec() for layer in self.layers]}
        arrays = {f"p{i}": p for i, p in enumerate(self.params())}
        buf = io.BytesIO()
        np.savez(buf, spec=json.dumps(spec), **arrays)
        with open(path, "wb") as f:
            f.write(buf.getvalue())

    @classmethod
    def load(cls, path) -> "Net":
        with np.load(path, allow_pickle=False) as data:
            spec = json.loads(str(data["spec"]))
            if spec["version"] != cls.CHECKPOINT_VERSION:
                raise ValueError(f"unsupported checkpoint version {spec['version']}")
            layers = []
            for lspec in spec["layers"]:
                kw = {k: v for k, v in lspec.items() if k != "kind"}
                layers.append(_LAYER_KINDS[lspec["kind"]](**kw))
            net = cls(layers)
            for i, p in enumerate(net.params()):
                p[...] = data[f"p{i}"]
        return net
